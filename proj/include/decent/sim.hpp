// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <unordered_set>

#include "decent/revoker.hpp"
#include "decent/verifier.hpp"

// Deterministic world simulator with a programmable adversary and a
// knowledge-tracking oracle. Scenarios declare platforms, hosts (honest or
// malicious), components and scripted actions; identical seeds produce
// byte-identical event logs. Frames crossing a malicious host are surrendered
// to the adversary, whose knowledge set is closed under message splitting,
// decryption with owned keys, and key-exchange completion with an owned
// private half.
namespace decent::sim {

// --- event log ---------------------------------------------------------------

struct EventLogEntry {
  Micros time = 0;
  std::string kind;    // Sent | Accepted | HandshakeOk | HandshakeRejected |
                       // ResumeOk | ResumeRejected | ShutDown | Revoked
  std::string actor;   // component name
  std::string detail;  // canonical, '|'-separated fields
};

class EventLog {
 public:
  void append(Micros time, std::string kind, std::string actor,
              std::string detail);
  std::vector<EventLogEntry> snapshot() const;
  std::string serialize() const;  // one line per entry, byte-stable

  // Accepted(receiver, peer measurement, peer list hash, payload digest)
  // must be preceded by Sent(sender with that measurement and list hash,
  // same payload digest). Requires at least one Accepted entry.
  bool authenticity_holds() const;

 private:
  mutable std::mutex mu_;
  std::vector<EventLogEntry> entries_;
};

// --- adversary knowledge ------------------------------------------------------

class KnowledgeSet {
 public:
  // Record a frame crossing an adversary-visible link.
  void observe_frame(fabric::ConnId conn, bool to_acceptor, ByteView frame);

  void add_owned_signing_key(ByteView private_key);
  void add_owned_kex_private(ByteView private_key);
  void add_owned_aead_key(const crypto::AeadKey& key);
  void add_item(ByteView item);

  // Fixpoint over the derivation rules, then membership. A secret counts as
  // known when it appears as any contiguous substring of derived knowledge.
  bool knows(ByteView needle);

  std::size_t frame_count() const;

 private:
  struct RecordCt {
    fabric::ConnId conn;
    std::uint8_t type;
    bool to_acceptor;
    std::uint64_t seq;
    Bytes ct;
  };
  struct HandshakeView {
    Bytes nonce_c, nonce_s, kex_pub_c, kex_pub_s;
    bool complete() const {
      return !nonce_c.empty() && !nonce_s.empty() && !kex_pub_c.empty() &&
             !kex_pub_s.empty();
    }
  };

  void insert(ByteView item);
  void split_tlv(ByteView data, int depth);
  void close();

  mutable std::mutex mu_;
  std::unordered_set<std::string> items_;
  std::vector<Bytes> owned_signing_keys_;
  std::vector<Bytes> owned_kex_privs_;
  std::vector<crypto::AeadKey> owned_aead_keys_;
  std::vector<RecordCt> records_;
  std::map<fabric::ConnId, HandshakeView> handshakes_;
  std::size_t frames_seen_ = 0;
  bool dirty_ = true;
};

// --- scenario configuration ----------------------------------------------------

struct ScenarioConfig {
  std::uint64_t seed = 0;
  Micros link_latency = 100;
  Micros run_for = 10 * kSecond;

  struct Platform {
    std::string name;
    std::string group = "G0";
  };
  struct Host {
    std::string name;
    std::string platform;
    bool honest = true;
  };
  struct AuthEntry {
    std::string blob;  // blob name, or "server" for the issuer enclave
    std::string service;
    std::string nested_list;  // optional: name of a nested definition
  };
  struct AuthListDef {
    std::string name;
    std::vector<AuthEntry> entries;
  };
  struct Component {
    std::string name;
    std::string host;
    std::string blob;
    std::string authlist;
    std::string service;  // role; also the echo service name when serving
    bool serve = false;
    std::string expect_service;           // peer name checked by the echo loop
    std::string expect_verifier_service;  // optional verifier path
    bool is_revoker = false;
    bool is_verifier = false;
    // When set, the component asks this verifier component for a
    // verified-app certificate during bootstrap.
    std::string verified_by;
    bool poll_revokers = false;
    component::RevokerConfig revokers;
  };

  struct Action {
    enum class Kind {
      SendSecret,       // from, to, service, payload
      Leak,             // from = component whose key leaks
      SubmitRevocation, // to = revoker component, payload = target blob
      IasRevoke,        // payload = platform name
    };
    Micros at = 0;
    Kind kind = Kind::SendSecret;
    std::string from;
    std::string to;
    std::string service;           // expected peer service for SendSecret
    std::string verifier_service;  // optional
    std::string payload;           // secret name / blob name / platform name
  };

  std::vector<Platform> platforms;
  std::vector<Host> hosts;
  std::vector<std::string> blobs;
  std::vector<AuthListDef> authlists;
  std::vector<Component> components;
  std::vector<std::pair<std::string, std::size_t>> secrets;  // name, length
  std::string adversary = "passive";  // passive | tamper | duplicate |
                                      // drop_node:<name> | drop_all
  std::vector<Action> actions;
  std::vector<std::string> assertions;  // "secrecy <name>" | "authenticity" |
                                        // "shutdown <comp>" | "accepted <a> <b>"
                                        // | "rejected <a> <b> <reason>"
  std::size_t stakeholders = 3;
  std::size_t threshold = 2;
};

// --- the world -----------------------------------------------------------------

class SimWorld {
 public:
  explicit SimWorld(ScenarioConfig config);
  ~SimWorld();

  SimWorld(const SimWorld&) = delete;
  SimWorld& operator=(const SimWorld&) = delete;

  // Runs scripted actions and traffic until `until` (defaults to the
  // config's run_for), then returns the event log.
  EventLog& run();
  EventLog& run(Micros until);

  bool assert_secrecy(ByteView secret);
  bool assert_secrecy(const std::string& secret_name);
  bool assert_authenticity() const { return log_.authenticity_holds(); }
  // Evaluates every assertion declared in the config.
  bool check_assertions();
  const std::vector<std::string>& assertion_failures() const {
    return assertion_failures_;
  }

  void adversary_leak_component_key(const std::string& component_name);

  fabric::VirtualFabric& fabric() { return *fabric_; }
  ias::IasSim& ias() { return *ias_; }
  EventLog& log() { return log_; }
  KnowledgeSet& knowledge() { return knowledge_; }
  component::ComponentPtr component(const std::string& name) const;
  server::ServerContext& server_on(const std::string& platform_name);
  revoker::RevokerService* revoker_service(const std::string& component_name);
  verifier::VerifierService* verifier_service(const std::string& component_name);
  platform::PlatformPtr platform(const std::string& name) const;
  const Bytes& secret(const std::string& name) const;
  crypto::Digest256 blob_digest(const std::string& blob_name) const;
  // Host-visible wall clock: the adversary may skew it freely, trusted
  // timers do not follow.
  void set_host_clock_offset(const std::string& host, std::int64_t offset);
  Micros host_now(const std::string& host) const;
  const std::vector<crypto::SigningKeyPair>& stakeholder_keys() const {
    return stakeholders_;
  }
  const authlist::AuthList& authlist(const std::string& name) const;
  // Captured frames on tapped links (all links when tap_all was set).
  const std::vector<Bytes>& captured_frames() const { return captured_; }

  // Sends `payload` from component `from` to the echo service of `to`,
  // logging handshake outcome and Sent/Accepted events. Returns the reject
  // reason ("" on success).
  std::string send_once(const std::string& from, const std::string& to,
                        const std::string& expected_service, ByteView payload,
                        const std::optional<std::string>& verifier_service = {});

 private:
  struct ComponentSlot {
    ScenarioConfig::Component config;
    component::ComponentPtr ctx;
    std::unique_ptr<revoker::RevokerService> revoker;
    std::unique_ptr<verifier::VerifierService> verifier;
  };

  void build();
  void bootstrap();  // runs inside a fabric task
  void install_tap();
  void spawn_echo_service(ComponentSlot& slot);
  void run_action(const ScenarioConfig::Action& action);
  fabric::TapAction adversary_act(fabric::TapEvent& ev);

  ScenarioConfig config_;
  std::unique_ptr<fabric::VirtualFabric> fabric_;
  std::unique_ptr<ias::IasSim> ias_;
  std::map<std::string, std::shared_ptr<platform::AttestationGroup>> groups_;
  std::map<std::string, platform::PlatformPtr> platforms_;
  std::map<std::string, std::unique_ptr<server::ServerContext>> servers_;
  std::map<std::string, std::unique_ptr<server::RemoteIas>> server_ias_;
  std::map<std::string, ComponentSlot> components_;
  std::map<std::string, authlist::AuthList> authlists_;
  std::map<std::string, Bytes> blobs_;
  std::map<std::string, Bytes> secrets_;
  std::vector<crypto::SigningKeyPair> stakeholders_;
  EventLog log_;
  KnowledgeSet knowledge_;
  std::vector<Bytes> captured_;
  std::vector<std::string> assertion_failures_;
  Rng adversary_rng_{0};
  std::uint64_t tamper_counter_ = 0;
  std::map<std::string, std::int64_t> host_clock_offsets_;
  bool adversary_armed_ = false;
  bool ran_ = false;
};

}  // namespace decent::sim
