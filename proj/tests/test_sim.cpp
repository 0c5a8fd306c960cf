// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/sim.hpp"

#include "doctest.h"

using namespace decent;
using namespace decent::sim;

namespace {

// Two honest apps exchanging a secret; every host is adversary-controlled,
// so every frame is observed.
ScenarioConfig two_app_config(std::uint64_t seed) {
  ScenarioConfig config;
  config.seed = seed;
  config.run_for = 8 * kSecond;
  config.platforms = {{"P1", "G0"}, {"P2", "G0"}};
  config.hosts = {{"H1", "P1", false}, {"H2", "P2", false}};
  config.blobs = {"sender_app", "receiver_app"};
  config.authlists.push_back(
      {"MAIN",
       {{"server", "DecentServer"},
        {"sender_app", "SenderService"},
        {"receiver_app", "ReceiverService"}}});
  ScenarioConfig::Component sender;
  sender.name = "A";
  sender.host = "H1";
  sender.blob = "sender_app";
  sender.authlist = "MAIN";
  sender.service = "SenderService";
  ScenarioConfig::Component receiver;
  receiver.name = "B";
  receiver.host = "H2";
  receiver.blob = "receiver_app";
  receiver.authlist = "MAIN";
  receiver.service = "ReceiverService";
  receiver.serve = true;
  receiver.expect_service = "SenderService";
  config.components = {sender, receiver};
  config.secrets = {{"S1", 32}};
  ScenarioConfig::Action send;
  send.at = 2 * kSecond;
  send.kind = ScenarioConfig::Action::Kind::SendSecret;
  send.from = "A";
  send.to = "B";
  send.service = "ReceiverService";
  send.payload = "S1";
  config.actions = {send};
  config.assertions = {"secrecy S1", "authenticity", "accepted A B"};
  return config;
}

}  // namespace

TEST_CASE("equal seeds give byte-identical event logs") {
  std::string log1, log2, log3;
  {
    SimWorld world(two_app_config(7));
    log1 = world.run().serialize();
  }
  {
    SimWorld world(two_app_config(7));
    log2 = world.run().serialize();
  }
  {
    SimWorld world(two_app_config(8));
    log3 = world.run().serialize();
  }
  CHECK(log1 == log2);
  CHECK(log1 != log3);
  CHECK_FALSE(log1.empty());
}

TEST_CASE("mutual authentication without embedded digests") {
  SimWorld world(two_app_config(3));
  // Neither binary embeds the other's identity: the circularity is broken
  // by naming services, not digests.
  auto a = world.component("A");
  auto b = world.component("B");
  const Bytes& blob_a = a->enclave().measurement().bytes != b->measurement().bytes
                            ? Bytes{}
                            : Bytes{};
  (void)blob_a;
  world.run();
  CHECK(world.check_assertions());

  auto entries = world.log().snapshot();
  bool accepted = false;
  for (const auto& e : entries) {
    if (e.kind == "Accepted" && e.actor == "B") accepted = true;
  }
  CHECK(accepted);
}

TEST_CASE("secrecy and authenticity hold under full observation") {
  SimWorld world(two_app_config(21));
  world.run();
  CHECK(world.assert_secrecy("S1"));
  CHECK(world.assert_authenticity());
  // The adversary saw traffic (malicious hosts tap every link)...
  CHECK(world.knowledge().frame_count() > 0);
  // ...and the payload bytes never surfaced in any captured frame.
  const Bytes& secret = world.secret("S1");
  for (const auto& frame : world.captured_frames()) {
    CHECK_FALSE(contains_bytes(frame, secret));
  }
}

TEST_CASE("component keys never cross the wire") {
  SimWorld world(two_app_config(33));
  world.run();
  for (const auto& name : {"A", "B"}) {
    const Bytes& key = world.component(name)->keypair().private_key;
    for (const auto& frame : world.captured_frames()) {
      CHECK_FALSE(contains_bytes(frame, key));
    }
  }
}

TEST_CASE("a list naming a rogue component severs the instance") {
  // The receiver's host swapped in a list that additionally authorizes a
  // rogue service; the sender must refuse before any payload flows.
  ScenarioConfig config = two_app_config(5);
  config.blobs.push_back("rogue_app");
  config.authlists.push_back(
      {"TAINTED",
       {{"server", "DecentServer"},
        {"sender_app", "SenderService"},
        {"receiver_app", "ReceiverService"},
        {"rogue_app", "ReceiverHelper"}}});
  config.components[1].authlist = "TAINTED";
  ScenarioConfig::Component rogue;
  rogue.name = "C";
  rogue.host = "H2";
  rogue.blob = "rogue_app";
  rogue.authlist = "TAINTED";
  rogue.service = "ReceiverHelper";
  rogue.serve = true;
  rogue.expect_service = "ReceiverService";
  config.components.push_back(rogue);
  config.assertions = {"secrecy S1", "rejected A B AUTHLIST_MISMATCH"};

  SimWorld world(std::move(config));
  world.run();
  CHECK(world.check_assertions());
  CHECK(world.assert_secrecy("S1"));
}

TEST_CASE("leaked keys of unauthorized components do not help") {
  ScenarioConfig config = two_app_config(13);
  config.adversary = "active";
  // An extra component running outside the instance: same issuer machinery,
  // different list. Its host leaks the signing key.
  config.blobs.push_back("outsider_app");
  config.authlists.push_back(
      {"OUTSIDER",
       {{"server", "DecentServer"}, {"outsider_app", "SenderService"}}});
  ScenarioConfig::Component outsider;
  outsider.name = "X";
  outsider.host = "H2";
  outsider.blob = "outsider_app";
  outsider.authlist = "OUTSIDER";
  outsider.service = "SenderService";
  config.components.push_back(outsider);

  ScenarioConfig::Action leak;
  leak.at = kSecond;
  leak.kind = ScenarioConfig::Action::Kind::Leak;
  leak.from = "X";
  config.actions.push_back(leak);

  SimWorld world(std::move(config));
  world.run();
  CHECK(world.assert_secrecy("S1"));
  CHECK(world.assert_authenticity());
  // The leaked key itself is adversary knowledge, the secret is not.
  CHECK(world.knowledge().knows(world.component("X")->keypair().private_key));
}

TEST_CASE("verified apps keep the properties") {
  ScenarioConfig config;
  config.seed = 17;
  config.run_for = 8 * kSecond;
  config.adversary = "active";
  config.platforms = {{"P1", "G0"}, {"P2", "G0"}};
  config.hosts = {{"H1", "P1", false}, {"H2", "P2", false}};
  config.blobs = {"sender_app", "receiver_app", "verifier_app"};
  // Neither app digest appears directly: both are dynamically authorized.
  config.authlists.push_back(
      {"MAIN",
       {{"server", "DecentServer"},
        {"verifier_app", "SenderVerifier"},
        {"verifier_app", "ReceiverVerifier"}}});
  ScenarioConfig::Component verifier;
  verifier.name = "V";
  verifier.host = "H1";
  verifier.blob = "verifier_app";
  verifier.authlist = "MAIN";
  verifier.service = "SenderVerifier";
  verifier.is_verifier = true;
  ScenarioConfig::Component sender;
  sender.name = "A";
  sender.host = "H1";
  sender.blob = "sender_app";
  sender.authlist = "MAIN";
  sender.service = "SenderService";
  sender.verified_by = "V";
  ScenarioConfig::Component receiver;
  receiver.name = "B";
  receiver.host = "H2";
  receiver.blob = "receiver_app";
  receiver.authlist = "MAIN";
  receiver.service = "ReceiverService";
  receiver.serve = true;
  receiver.expect_service = "SenderService";
  receiver.expect_verifier_service = "SenderVerifier";
  receiver.verified_by = "V";
  config.components = {verifier, sender, receiver};
  config.secrets = {{"S1", 32}};

  ScenarioConfig::Action send;
  send.at = 2 * kSecond;
  send.kind = ScenarioConfig::Action::Kind::SendSecret;
  send.from = "A";
  send.to = "B";
  send.service = "ReceiverService";
  send.verifier_service = "ReceiverVerifier";
  send.payload = "S1";
  config.actions = {send};
  config.assertions = {"secrecy S1", "authenticity", "accepted A B"};

  SimWorld world(std::move(config));
  world.run();
  CHECK(world.check_assertions());
}

TEST_CASE("revocation propagates within one poll interval") {
  ScenarioConfig config;
  config.seed = 31;
  config.run_for = 30 * kSecond;
  config.platforms = {{"P1", "G0"}};
  config.hosts = {{"H1", "P1", true}};
  config.blobs = {"app_a", "app_b", "revoker_app"};
  config.authlists.push_back({"MAIN",
                              {{"server", "DecentServer"},
                               {"app_a", "SvcA"},
                               {"app_b", "SvcB"},
                               {"revoker_app", "DecentRevoker"}}});
  ScenarioConfig::Component revoker;
  revoker.name = "R";
  revoker.host = "H1";
  revoker.blob = "revoker_app";
  revoker.authlist = "MAIN";
  revoker.service = "DecentRevoker";
  revoker.is_revoker = true;
  ScenarioConfig::Component a;
  a.name = "A";
  a.host = "H1";
  a.blob = "app_a";
  a.authlist = "MAIN";
  a.service = "SvcA";
  a.poll_revokers = true;
  a.revokers.endpoints = {{"R", "svc"}};
  a.revokers.poll_interval = 5 * kSecond;
  a.revokers.poll_timeout = kSecond;
  ScenarioConfig::Component b;
  b.name = "B";
  b.host = "H1";
  b.blob = "app_b";
  b.authlist = "MAIN";
  b.service = "SvcB";
  b.serve = true;
  b.expect_service = "SvcA";
  config.components = {revoker, a, b};

  // Before revocation: accepted. After: refused within one poll interval.
  ScenarioConfig::Action ok_send;
  ok_send.at = 2 * kSecond;
  ok_send.kind = ScenarioConfig::Action::Kind::SendSecret;
  ok_send.from = "A";
  ok_send.to = "B";
  ok_send.service = "SvcB";
  ok_send.payload = "hello";
  ScenarioConfig::Action revoke;
  revoke.at = 3 * kSecond;
  revoke.kind = ScenarioConfig::Action::Kind::SubmitRevocation;
  revoke.to = "R";
  revoke.payload = "app_b";
  ScenarioConfig::Action late_send;
  late_send.at = 9 * kSecond;  // beyond one poll interval after revocation
  late_send.kind = ScenarioConfig::Action::Kind::SendSecret;
  late_send.from = "A";
  late_send.to = "B";
  late_send.service = "SvcB";
  late_send.payload = "again";
  config.actions = {ok_send, revoke, late_send};
  config.assertions = {"accepted A B", "rejected A B REVOKED", "running A"};

  SimWorld world(std::move(config));
  world.run();
  CHECK(world.check_assertions());
}

TEST_CASE("suppressing revoker replies forces shutdown") {
  ScenarioConfig config;
  config.seed = 41;
  config.platforms = {{"P1", "G0"}};
  config.hosts = {{"H1", "P1", false}};  // adversarial host
  config.blobs = {"app_a", "revoker_app"};
  config.authlists.push_back({"MAIN",
                              {{"server", "DecentServer"},
                               {"app_a", "SvcA"},
                               {"revoker_app", "DecentRevoker"}}});
  ScenarioConfig::Component revoker;
  revoker.name = "R";
  revoker.host = "H1";
  revoker.blob = "revoker_app";
  revoker.authlist = "MAIN";
  revoker.service = "DecentRevoker";
  revoker.is_revoker = true;
  ScenarioConfig::Component a;
  a.name = "A";
  a.host = "H1";
  a.blob = "app_a";
  a.authlist = "MAIN";
  a.service = "SvcA";
  a.poll_revokers = true;
  a.revokers.endpoints = {{"R", "svc"}};
  a.revokers.poll_interval = 5 * kSecond;
  a.revokers.poll_timeout = kSecond;
  a.revokers.max_missed = 3;
  config.components = {revoker, a};
  config.adversary = "drop_node:R";
  config.run_for = 25 * kSecond;
  config.assertions = {"shutdown A"};

  SimWorld world(std::move(config));
  // Not yet shut down before the third failed poll can complete.
  world.run(11 * kSecond);
  CHECK(world.component("A")->state() == component::State::Running);
  // After max_missed * poll_interval (plus timeouts) the component stops.
  world.run(25 * kSecond);
  CHECK(world.check_assertions());

  auto entries = world.log().snapshot();
  bool shutdown_logged = false;
  for (const auto& e : entries) {
    if (e.kind == "ShutDown" && e.actor == "A") {
      shutdown_logged = true;
      CHECK(e.time <= 21 * kSecond);  // 3 polls * (5s interval + 1s timeout)
    }
  }
  CHECK(shutdown_logged);
}

TEST_CASE("revoker channels stay open whatever the list says") {
  ScenarioConfig config;
  config.seed = 47;
  config.run_for = 20 * kSecond;
  config.platforms = {{"P1", "G0"}};
  config.hosts = {{"H1", "P1", true}};
  config.blobs = {"app_a", "revoker_app"};
  config.authlists.push_back({"MAIN",
                              {{"server", "DecentServer"},
                               {"app_a", "SvcA"},
                               {"revoker_app", "DecentRevoker"}}});
  ScenarioConfig::Component revoker;
  revoker.name = "R";
  revoker.host = "H1";
  revoker.blob = "revoker_app";
  revoker.authlist = "MAIN";
  revoker.service = "DecentRevoker";
  revoker.is_revoker = true;
  ScenarioConfig::Component a;
  a.name = "A";
  a.host = "H1";
  a.blob = "app_a";
  a.authlist = "MAIN";
  a.service = "SvcA";
  a.poll_revokers = true;
  a.revokers.endpoints = {{"R", "svc"}};
  a.revokers.poll_interval = 4 * kSecond;
  a.revokers.poll_timeout = kSecond;
  config.components = {revoker, a};

  // Even a list placing the revoker digest on the revocation list cannot
  // block revoker channels: polls keep succeeding and A stays up.
  ScenarioConfig::Action revoke_self;
  revoke_self.at = 2 * kSecond;
  revoke_self.kind = ScenarioConfig::Action::Kind::SubmitRevocation;
  revoke_self.to = "R";
  revoke_self.payload = "app_a";  // A itself lands on the list
  config.actions = {revoke_self};
  config.assertions = {"running A"};

  SimWorld world(std::move(config));
  world.run();
  CHECK(world.check_assertions());
  // A's own digest is revoked, yet its polls to R continued (exemption).
  CHECK(world.component("A")->corl_view()->is_revoked(
      world.blob_digest("app_a")));
}

TEST_CASE("trusted time ignores host clock skew") {
  SimWorld world(two_app_config(51));
  Micros before = world.component("A")->trusted_now();
  world.set_host_clock_offset("H1", -1'000'000'000);
  CHECK(world.host_now("H1") < before);  // host clock rewound
  world.run(9 * kSecond);
  Micros after = world.component("A")->trusted_now();
  CHECK(after >= before);
  CHECK(after == 9 * kSecond);
}

TEST_CASE("replayed handshake openings fail the transcript check") {
  ScenarioConfig config = two_app_config(61);
  config.adversary = "active";
  config.run_for = 10 * kSecond;
  SimWorld world(std::move(config));
  world.run();
  CHECK(world.assert_secrecy("S1"));
  CHECK(world.assert_authenticity());

  // The replayed M1 must have drawn an alert, not a session.
  auto entries = world.log().snapshot();
  bool replay_attempted = false;
  for (const auto& e : entries) {
    if (e.kind == "AdversaryReplay") {
      replay_attempted = true;
      CHECK(e.detail.find("|alert") != std::string::npos);
    }
  }
  CHECK(replay_attempted);
}

TEST_CASE("the knowledge closure does not invent decryptions") {
  ScenarioConfig config = two_app_config(71);
  SimWorld world(std::move(config));
  world.run();
  // Canary: a fresh AEAD ciphertext under a key the adversary never owned.
  Rng rng(1);
  auto key = crypto::AeadKey::from_bytes(rng.bytes(32));
  Bytes canary_pt = rng.bytes(48);
  Bytes canary_ct =
      crypto::aead_seal(key, rng.bytes(12), Bytes{}, canary_pt);
  world.knowledge().add_item(canary_ct);
  CHECK_FALSE(world.knowledge().knows(canary_pt));
  CHECK(world.knowledge().knows(canary_ct));
}
