// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <functional>
#include <map>
#include <mutex>

#include "decent/channel.hpp"
#include "decent/server.hpp"

// Component runtime: key generation, certificate acquisition over local
// attestation, channel establishment, authorization-list-bound sealing, and
// revocation polling with fail-shutdown.
namespace decent::component {

class ComponentShutDown : public std::runtime_error {
 public:
  ComponentShutDown() : std::runtime_error("component is shut down") {}
};

enum class State { Running, ShutDown };

struct SealedBlob {
  Bytes label;
  Bytes nonce;  // 12 bytes, fresh per seal
  Bytes ciphertext;

  Bytes encode() const;
  static SealedBlob decode(ByteView data);
};

struct RevokerConfig {
  std::vector<fabric::Address> endpoints;
  std::string revoker_service{authlist::kRevokerService};
  // Names of verifiers allowed to vouch for revokers; these join the
  // revocation-exempt set.
  std::vector<std::string> verifier_of_revoker_services;
  Micros poll_interval = 5 * kSecond;
  Micros poll_timeout = 1 * kSecond;
  int max_missed = 3;
};

// Component-side half of the certificate acquisition protocol served by
// ServerContext::la_issue. Exposed for tests that drive it directly.
struct AcquiredChain {
  certs::CertChain chain;
};
AcquiredChain acquire_chain(const platform::EnclaveHandle& enclave,
                            const crypto::SigningKeyPair& keypair,
                            const authlist::AuthList& list,
                            const fabric::ConnPtr& conn, Rng& rng,
                            Micros timeout = 5 * kSecond);

struct ComponentOptions {
  RevokerConfig revokers;
  channel::TicketManager* ticket_manager = nullptr;  // optional override
  Micros handshake_timeout = channel::kDefaultHandshakeTimeout;
  // Observer notified once when the context transitions to ShutDown.
  std::function<void()> on_shutdown;
};

class ComponentContext : public std::enable_shared_from_this<ComponentContext> {
 public:
  using Options = ComponentOptions;

  // Full initialization: generates the identity key and obtains the chain
  // from the platform-local issuer at `server_la_addr`.
  static std::shared_ptr<ComponentContext> init(
      platform::EnclaveHandle enclave, authlist::AuthList list,
      fabric::Fabric& fabric, std::string node_name,
      const fabric::Address& server_la_addr, Bytes authority_key, Rng rng,
      Options options = {});

  // Chain-less context (sealing and accept-open only); used by tests and by
  // anonymous clients.
  static std::shared_ptr<ComponentContext> create_local(
      platform::EnclaveHandle enclave, authlist::AuthList list,
      fabric::Fabric& fabric, std::string node_name, Bytes authority_key,
      Rng rng, Options options = {});

  // --- channels ---
  std::shared_ptr<channel::SecureChannel> connect(
      const fabric::Address& addr, const std::string& expected_service,
      std::optional<std::string> expected_verifier_service = {},
      std::optional<std::string> expected_verifier_of_verifier = {});
  std::shared_ptr<channel::SecureChannel> accept(
      fabric::ConnPtr conn, const channel::HandshakeConfig& config);
  std::shared_ptr<channel::SecureChannel> resume(
      const fabric::Address& addr, const channel::ResumptionTicket& ticket);

  // Handshake configuration with this component's ticket manager installed.
  channel::HandshakeConfig accept_config(
      channel::Mode mode, std::string expected_service,
      std::optional<std::string> expected_verifier_service = {}) const;

  // Borrowed view for the channel layer; valid while the context lives.
  channel::LocalParty party() const;

  // --- sealing ---
  SealedBlob seal(ByteView label, ByteView plaintext);
  // nullopt when (platform, measurement, authorization list, label) do not
  // all match the sealing context.
  std::optional<Bytes> unseal(const SealedBlob& blob);

  // --- revocation ---
  // One polling round against every configured revoker; returns true when
  // all endpoints answered with a valid, monotonic list.
  bool poll_revocations_once();
  // Spawns the recurring poller; the context shuts down after max_missed
  // consecutive failed rounds on any endpoint.
  void start_revocation_polling();
  std::shared_ptr<const certs::CorlView> corl_view() const;
  // Test hook: apply a signed list as if pulled from its revoker.
  bool ingest_corl(const crypto::Digest256& revoker_measurement,
                   ByteView peer_public_key, std::uint64_t seq,
                   const std::vector<crypto::Digest256>& entries,
                   ByteView signature);

  // Extends the chain with a certificate issued by a verifier, plus the
  // verifier's own chain for peers to check.
  void install_verified(certs::VerifiedAppCertificate cert,
                        std::shared_ptr<const certs::CertChain> verifier_chain);

  State state() const;
  void shutdown();

  // --- introspection ---
  const authlist::AuthList& list() const { return authlist_; }
  const platform::EnclaveHandle& enclave() const { return enclave_; }
  const crypto::Digest256& measurement() const {
    return enclave_.measurement();
  }
  std::shared_ptr<const certs::CertChain> chain() const;
  const crypto::SigningKeyPair& keypair() const { return keypair_; }
  const std::string& node_name() const { return node_name_; }
  fabric::Fabric& fabric() const { return fabric_; }
  channel::TicketManager& ticket_manager() { return *tickets_; }
  Micros trusted_now() const { return enclave_.trusted_now(); }
  Bytes random_bytes(std::size_t n);
  const Bytes& authority_key() const { return authority_key_; }
  std::vector<std::string> revocation_exempt() const;

 private:
  ComponentContext(platform::EnclaveHandle enclave, authlist::AuthList list,
                   fabric::Fabric& fabric, std::string node_name,
                   Bytes authority_key, Rng rng, Options options);

  void require_running() const;
  void register_channel(const std::shared_ptr<channel::SecureChannel>& ch);
  crypto::AeadKey seal_key(ByteView label) const;
  Bytes seal_ad(ByteView label) const;

  platform::EnclaveHandle enclave_;
  authlist::AuthList authlist_;
  fabric::Fabric& fabric_;
  std::string node_name_;
  Bytes authority_key_;
  Options options_;

  mutable std::mutex mu_;
  Rng rng_;
  crypto::SigningKeyPair keypair_;
  std::shared_ptr<const certs::CertChain> chain_;
  std::unique_ptr<channel::TicketManager> tickets_;
  std::shared_ptr<const certs::CorlView> corl_ =
      std::make_shared<certs::CorlView>();
  std::map<std::string, std::uint64_t> revoker_seq_;  // by revoker digest hex
  std::map<std::string, int> revoker_misses_;         // by endpoint string
  std::vector<std::weak_ptr<channel::SecureChannel>> channels_;
  State state_ = State::Running;
};

using ComponentPtr = std::shared_ptr<ComponentContext>;

}  // namespace decent::component
