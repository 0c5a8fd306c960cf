// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/certs.hpp"

#include "decent/tlv.hpp"

#include "doctest.h"
#include "harness.hpp"

using namespace decent;
using namespace decent::certs;
using namespace testbed;

namespace {

struct Scene {
  World world;
  Issuer issuer;
  Bytes app_blob;
  Bytes peer_blob;
  authlist::AuthList list;
  Member member;

  Scene()
      : issuer(make_issuer(world, nullptr)),
        app_blob(world.rng.bytes(64)),
        peer_blob(world.rng.bytes(64)),
        list(list_of({{issuer_blob(), "DecentServer"},
                      {app_blob, "ServiceA"},
                      {peer_blob, "ServiceB"}})),
        member(make_member(world, issuer, app_blob, list)) {}

  ChainExpectation expect(const std::string& service) const {
    ChainExpectation e;
    e.expected_service = service;
    return e;
  }
};

}  // namespace

TEST_CASE("honest chain yields a peer identity") {
  Scene s;
  ChainResult result = verify_chain(s.member.chain, s.expect("ServiceA"),
                                    context_for(s.world, s.list));
  REQUIRE(result.ok());
  CHECK(result.peer->measurement == s.member.measurement);
  CHECK(result.peer->public_key == s.member.key.public_key);
  CHECK(result.peer->service == "ServiceA");
  CHECK(result.peer->authlist_hash == s.list.hash());
  CHECK_FALSE(result.peer->via_verifier);
}

TEST_CASE("verdicts are pure functions of the inputs") {
  Scene s;
  auto ctx = context_for(s.world, s.list);
  auto r1 = verify_chain(s.member.chain, s.expect("ServiceA"), ctx);
  auto r2 = verify_chain(s.member.chain, s.expect("ServiceA"), ctx);
  CHECK(r1.reason == r2.reason);
  CHECK(r1.peer->measurement == r2.peer->measurement);
}

TEST_CASE("each check failure maps to its designated reason") {
  Scene s;

  SUBCASE("corrupted issuer self-signature") {
    CertChain chain = s.member.chain;
    chain.sa.self_signature[0] ^= 0x01;
    CHECK(verify_chain(chain, s.expect("ServiceA"),
                       context_for(s.world, s.list))
              .reason == RejectReason::BadSaSignature);
  }

  SUBCASE("expired issuer certificate") {
    s.world.clock->advance_by(25ull * 3600 * kSecond);
    CHECK(verify_chain(s.member.chain, s.expect("ServiceA"),
                       context_for(s.world, s.list))
              .reason == RejectReason::Expired);
  }

  SUBCASE("not yet valid issuer certificate") {
    auto ctx = context_for(s.world, s.list);
    ctx.now = 0;
    CHECK(verify_chain(s.member.chain, s.expect("ServiceA"), ctx).reason ==
          RejectReason::Expired);
  }

  SUBCASE("forged attestation report") {
    CertChain chain = s.member.chain;
    chain.sa.ias_report.signature[0] ^= 0x01;
    // Self-signature must be recomputed or the earlier check fires first.
    chain.sa.self_signature =
        crypto::sign(s.issuer.key.private_key, chain.sa.signed_payload());
    CHECK(verify_chain(chain, s.expect("ServiceA"),
                       context_for(s.world, s.list))
              .reason == RejectReason::BadIasSignature);
  }

  SUBCASE("authority said the platform group is revoked") {
    s.world.ias.revoke_platform(s.issuer.plat->id());
    Issuer revoked = make_issuer(s.world, s.issuer.plat);
    Member m = make_member(s.world, revoked, s.app_blob, s.list);
    CHECK(verify_chain(m.chain, s.expect("ServiceA"),
                       context_for(s.world, s.list))
              .reason == RejectReason::IasVerdictNotOk);
  }

  SUBCASE("report does not bind the issuer key") {
    // The report binds a different keypair's fingerprint.
    Issuer impostor = s.issuer;
    impostor.key = crypto::SigningKeyPair::generate(s.world.rng);
    impostor.sa.server_public_key = impostor.key.public_key;
    impostor.sa.self_signature = crypto::sign(impostor.key.private_key,
                                              impostor.sa.signed_payload());
    Member m = make_member(s.world, impostor, s.app_blob, s.list);
    CHECK(verify_chain(m.chain, s.expect("ServiceA"),
                       context_for(s.world, s.list))
              .reason == RejectReason::FingerprintMismatch);
  }

  SUBCASE("issuer enclave missing from the local list") {
    authlist::AuthList no_server = list_of(
        {{s.app_blob, "ServiceA"}, {s.peer_blob, "ServiceB"}});
    Member m = make_member(s.world, s.issuer, s.app_blob, no_server);
    CHECK(verify_chain(m.chain, s.expect("ServiceA"),
                       context_for(s.world, no_server))
              .reason == RejectReason::ServerNotAuthorized);
  }

  SUBCASE("component certificate not signed by the issuer") {
    CertChain chain = s.member.chain;
    chain.component.signature[0] ^= 0x01;
    CHECK(verify_chain(chain, s.expect("ServiceA"),
                       context_for(s.world, s.list))
              .reason == RejectReason::BadComponentSignature);
  }

  SUBCASE("peer loaded a different authorization list") {
    Bytes stranger = s.world.rng.bytes(64);
    authlist::AuthList other = list_of({{issuer_blob(), "DecentServer"},
                                        {s.app_blob, "ServiceA"},
                                        {stranger, "ServiceX"}});
    Member m = make_member(s.world, s.issuer, s.app_blob, other);
    CHECK(verify_chain(m.chain, s.expect("ServiceA"),
                       context_for(s.world, s.list))
              .reason == RejectReason::AuthListMismatch);
  }

  SUBCASE("digest not authorized for the expected service") {
    CHECK(verify_chain(s.member.chain, s.expect("ServiceB"),
                       context_for(s.world, s.list))
              .reason == RejectReason::ServiceNotAuthorized);
  }

  SUBCASE("revoked digest") {
    CorlView corl;
    corl.revoked.insert(s.member.measurement);
    auto ctx = context_for(s.world, s.list, &corl);
    CHECK(verify_chain(s.member.chain, s.expect("ServiceA"), ctx).reason ==
          RejectReason::Revoked);
  }

  SUBCASE("revoked issuer enclave") {
    CorlView corl;
    corl.revoked.insert(crypto::hash(issuer_blob()));
    auto ctx = context_for(s.world, s.list, &corl);
    CHECK(verify_chain(s.member.chain, s.expect("ServiceA"), ctx).reason ==
          RejectReason::Revoked);
  }
}

TEST_CASE("dynamic authorization through a listed verifier") {
  World w;
  Issuer issuer = make_issuer(w, nullptr);
  Bytes verifier_blob = w.rng.bytes(64);
  Bytes new_app_blob = w.rng.bytes(64);
  // The new app's digest is NOT in the list; its verifier is.
  authlist::AuthList list = list_of({{issuer_blob(), "DecentServer"},
                                     {verifier_blob, "TripMatcherVerifier"}});
  Member verifier = make_member(w, issuer, verifier_blob, list);
  Member app = make_member(w, issuer, new_app_blob, list);
  attach_verified(app, verifier, "TripMatcher");

  ChainExpectation expect;
  expect.expected_service = "TripMatcher";

  SUBCASE("accepted when the verifier name is configured") {
    expect.verifier_service = "TripMatcherVerifier";
    ChainResult result =
        verify_chain(app.chain, expect, context_for(w, list));
    REQUIRE(result.ok());
    CHECK(result.peer->via_verifier);
    CHECK(result.peer->measurement == app.measurement);
  }

  SUBCASE("rejected without a configured verifier name") {
    CHECK(verify_chain(app.chain, expect, context_for(w, list)).reason ==
          RejectReason::ServiceNotAuthorized);
  }

  SUBCASE("wrong target service on the verified certificate") {
    expect.verifier_service = "TripMatcherVerifier";
    attach_verified(app, verifier, "BillingService");
    CHECK(verify_chain(app.chain, expect, context_for(w, list)).reason ==
          RejectReason::VerifierServiceMismatch);
  }

  SUBCASE("verifier not under the expected verifier name") {
    expect.verifier_service = "OtherVerifier";
    CHECK(verify_chain(app.chain, expect, context_for(w, list)).reason ==
          RejectReason::BadVerifierChain);
  }

  SUBCASE("forged verified-app signature") {
    expect.verifier_service = "TripMatcherVerifier";
    app.chain.verified->signature[0] ^= 0x01;
    CHECK(verify_chain(app.chain, expect, context_for(w, list)).reason ==
          RejectReason::BadVerifierChain);
  }

  SUBCASE("verifier chain missing") {
    expect.verifier_service = "TripMatcherVerifier";
    app.chain.verifier_chain = nullptr;
    CHECK(verify_chain(app.chain, expect, context_for(w, list)).reason ==
          RejectReason::BadVerifierChain);
  }

  SUBCASE("verified fields inconsistent with the component certificate") {
    expect.verifier_service = "TripMatcherVerifier";
    app.chain.verified->component_measurement.bytes[0] ^= 0x01;
    CHECK(verify_chain(app.chain, expect, context_for(w, list)).reason ==
          RejectReason::BadVerifierChain);
  }

  SUBCASE("verifier with a mismatched list never authorizes") {
    expect.verifier_service = "TripMatcherVerifier";
    Bytes stranger = w.rng.bytes(64);
    authlist::AuthList other = list_of({{issuer_blob(), "DecentServer"},
                                        {verifier_blob, "TripMatcherVerifier"},
                                        {stranger, "Extra"}});
    Member rogue_verifier = make_member(w, issuer, verifier_blob, other);
    attach_verified(app, rogue_verifier, "TripMatcher");
    CHECK(verify_chain(app.chain, expect, context_for(w, list)).reason ==
          RejectReason::BadVerifierChain);
  }

  SUBCASE("revocation of the verifier kills issued chains") {
    expect.verifier_service = "TripMatcherVerifier";
    CorlView corl;
    corl.revoked.insert(verifier.measurement);
    auto ctx = context_for(w, list, &corl);
    CHECK(verify_chain(app.chain, expect, ctx).reason ==
          RejectReason::Revoked);
  }
}

TEST_CASE("verifier chain depth is bounded") {
  World w;
  Issuer issuer = make_issuer(w, nullptr);
  Bytes root_blob = w.rng.bytes(64);
  Bytes mid_blob = w.rng.bytes(64);
  Bytes leaf_blob = w.rng.bytes(64);
  authlist::AuthList list =
      list_of({{issuer_blob(), "DecentServer"}, {root_blob, "RootVerifier"}});

  Member root = make_member(w, issuer, root_blob, list);
  Member mid = make_member(w, issuer, mid_blob, list);
  attach_verified(mid, root, "MidVerifier");
  Member leaf = make_member(w, issuer, leaf_blob, list);
  attach_verified(leaf, mid, "LeafService");

  ChainExpectation expect;
  expect.expected_service = "LeafService";
  expect.verifier_service = "MidVerifier";

  SUBCASE("a verified-app verifier is rejected by default") {
    CHECK(verify_chain(leaf.chain, expect, context_for(w, list)).reason ==
          RejectReason::BadVerifierChain);
  }

  SUBCASE("one configured extra level is accepted, no more") {
    expect.verifier_of_verifier_service = "RootVerifier";
    ChainResult result = verify_chain(leaf.chain, expect, context_for(w, list));
    REQUIRE(result.ok());
    CHECK(result.peer->via_verifier);

    // Extend one level further: root itself now presents a verified chain.
    Bytes deep_blob = w.rng.bytes(64);
    authlist::AuthList deep_list =
        list_of({{issuer_blob(), "DecentServer"}, {deep_blob, "DeepVerifier"}});
    Member deep = make_member(w, issuer, deep_blob, deep_list);
    Member fake_root = make_member(w, issuer, root_blob, deep_list);
    attach_verified(fake_root, deep, "RootVerifier");
    Member mid2 = make_member(w, issuer, mid_blob, deep_list);
    attach_verified(mid2, fake_root, "MidVerifier");
    Member leaf2 = make_member(w, issuer, leaf_blob, deep_list);
    attach_verified(leaf2, mid2, "LeafService");
    CHECK(verify_chain(leaf2.chain, expect, context_for(w, deep_list)).reason ==
          RejectReason::BadVerifierChain);
  }
}

TEST_CASE("issuer enclaves cannot be dynamically authorized") {
  World w;
  Issuer issuer = make_issuer(w, nullptr);
  Bytes verifier_blob = w.rng.bytes(64);
  authlist::AuthList list = list_of(
      {{issuer_blob(), "DecentServer"}, {verifier_blob, "ServerVerifier"}});
  Member verifier = make_member(w, issuer, verifier_blob, list);
  Bytes rogue_blob = w.rng.bytes(64);
  Member rogue = make_member(w, issuer, rogue_blob, list);
  attach_verified(rogue, verifier, "DecentServer");

  ChainExpectation expect;
  expect.expected_service = "DecentServer";
  expect.verifier_service = "ServerVerifier";
  CHECK(verify_chain(rogue.chain, expect, context_for(w, list)).reason ==
        RejectReason::ServiceNotAuthorized);
}

TEST_CASE("stateless open service accepted via nested definition") {
  World w;
  Issuer issuer = make_issuer(w, nullptr);
  Bytes planner_blob = w.rng.bytes(64);
  Bytes billing_blob = w.rng.bytes(64);
  Bytes matcher_blob = w.rng.bytes(64);

  // The shared sub-application's own list.
  authlist::AuthList sub = list_of({{issuer_blob(), "DecentServer"},
                                    {planner_blob, "TripPlanner"},
                                    {billing_blob, "BillingService"}});
  // The outer application authorizes the planner by nested definition.
  auto nested = std::make_shared<authlist::AuthList>(sub);
  authlist::AuthList outer = authlist::AuthList::from_entries({
      {crypto::hash(issuer_blob()), authlist::ServiceName("DecentServer")},
      {crypto::hash(matcher_blob), authlist::ServiceName("TripMatcher")},
      {crypto::hash(planner_blob), authlist::ServiceName("TripPlanner"),
       nested},
  });

  Member planner = make_member(w, issuer, planner_blob, sub);

  ChainExpectation expect;
  expect.expected_service = "TripPlanner";

  SUBCASE("nested byte-match accepted") {
    ChainResult result =
        verify_chain(planner.chain, expect, context_for(w, outer));
    REQUIRE(result.ok());
    CHECK(result.peer->authlist_hash == sub.hash());
  }

  SUBCASE("a different sub-list is still a mismatch") {
    Bytes stranger = w.rng.bytes(64);
    authlist::AuthList other_sub = list_of({{issuer_blob(), "DecentServer"},
                                            {planner_blob, "TripPlanner"},
                                            {stranger, "BillingService"}});
    Member impostor = make_member(w, issuer, planner_blob, other_sub);
    CHECK(verify_chain(impostor.chain, expect, context_for(w, outer)).reason ==
          RejectReason::AuthListMismatch);
  }

  SUBCASE("entry without nesting gives no byte-match escape") {
    Member impostor = make_member(w, issuer, matcher_blob, sub);
    ChainExpectation matcher_expect;
    matcher_expect.expected_service = "TripMatcher";
    CHECK(verify_chain(impostor.chain, matcher_expect, context_for(w, outer))
              .reason == RejectReason::AuthListMismatch);
  }
}

TEST_CASE("revocation exemption for revoker services") {
  World w;
  Issuer issuer = make_issuer(w, nullptr);
  Bytes revoker_blob = w.rng.bytes(64);
  Bytes app_blob = w.rng.bytes(64);
  authlist::AuthList list = list_of({{issuer_blob(), "DecentServer"},
                                     {revoker_blob, "DecentRevoker"},
                                     {app_blob, "TripMatcher"}});
  Member revoker = make_member(w, issuer, revoker_blob, list);
  Member app = make_member(w, issuer, app_blob, list);

  CorlView corl;
  corl.revoked.insert(revoker.measurement);
  corl.revoked.insert(app.measurement);
  auto ctx = context_for(w, list, &corl);

  ChainExpectation app_expect;
  app_expect.expected_service = "TripMatcher";
  CHECK(verify_chain(app.chain, app_expect, ctx).reason ==
        RejectReason::Revoked);

  ChainExpectation revoker_expect;
  revoker_expect.expected_service = "DecentRevoker";
  CHECK(verify_chain(revoker.chain, revoker_expect, ctx).ok());
}

TEST_CASE("certificate encodings round-trip and reject corruption") {
  Scene s;
  attach_verified(s.member, make_member(s.world, s.issuer,
                                        s.world.rng.bytes(64), s.list),
                  "ServiceA");

  Bytes encoded = s.member.chain.encode();
  CertChain decoded = CertChain::decode(encoded);
  CHECK(decoded.encode() == encoded);

  Bytes truncated(encoded.begin(), encoded.end() - 5);
  CHECK_THROWS_AS(CertChain::decode(truncated), tlv::MalformedEncoding);

  // Reordered fields violate canonical tag order.
  tlv::Writer w;
  w.field(1, s.member.chain.component.encode());
  CHECK_THROWS_AS(CertChain::decode(w.bytes()), tlv::MalformedEncoding);

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Bytes mangled = encoded;
    mangled[rng.below(std::min<std::size_t>(40, mangled.size()))] ^= 0x10;
    try {
      CertChain reparsed = CertChain::decode(mangled);
      // Parseable mutations must still differ or re-encode identically.
      CHECK(reparsed.encode() == mangled);
    } catch (const tlv::MalformedEncoding&) {
      // rejected, fine
    }
  }
}

TEST_CASE("issuance-depth check stops at the list comparison") {
  Scene s;
  auto ctx = context_for(s.world, s.list);
  ChainResult vetted = verify_chain_for_issuance(s.member.chain, ctx);
  REQUIRE(vetted.ok());
  CHECK(vetted.peer->measurement == s.member.measurement);

  Bytes stranger = s.world.rng.bytes(64);
  authlist::AuthList other = list_of(
      {{issuer_blob(), "DecentServer"}, {stranger, "ServiceX"}});
  Member m = make_member(s.world, s.issuer, s.app_blob, other);
  CHECK(verify_chain_for_issuance(m.chain, ctx).reason ==
        RejectReason::AuthListMismatch);
}
