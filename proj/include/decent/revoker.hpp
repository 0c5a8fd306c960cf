// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <set>

#include "decent/component.hpp"

// Revocation authority: maintains a signed append-only component revocation
// list, accepts threshold revocation requests and private-key compromise
// evidence, and serves pulls. Digests authorized as revokers (or as their
// verifiers) can never be revoked.
namespace decent::revoker {

struct RevocationRequest {
  Bytes stakeholder_public_key;
  crypto::Digest256 target_measurement;
  Bytes signature;  // over the target measurement

  Bytes signed_payload() const;
  Bytes encode() const;
  static RevocationRequest decode(ByteView data);

  static RevocationRequest make(const crypto::SigningKeyPair& stakeholder,
                                const crypto::Digest256& target);
};

struct RevokerPolicy {
  std::vector<Bytes> stakeholder_keys;
  std::size_t threshold = 1;
  // Additional service names whose digests are protected from revocation.
  std::vector<std::string> verifier_of_revoker_services;
};

class RevokerError : public std::runtime_error {
 public:
  enum class Kind {
    UnknownStakeholder,
    BadSignature,
    EvidenceInvalid,
    TargetProtected,  // digest serves as revoker or revoker-verifier
  };

  RevokerError(Kind kind, const std::string& what)
      : std::runtime_error("revoker: " + what), kind(kind) {}

  Kind kind;
};

class RevokerService {
 public:
  RevokerService(component::ComponentPtr ctx, RevokerPolicy policy);

  // Records one request; at the threshold the target digest is appended and
  // the list re-signed. Idempotent for already revoked digests.
  void submit_revocation(const RevocationRequest& request);

  // Auto-revocation from compromise evidence: the submitted private key must
  // produce a signature valid under the claimed chain's component key, and
  // the chain must be structurally valid for this instance.
  void submit_key_evidence(ByteView private_key_bytes,
                           const certs::CertChain& claimed_chain);

  certs::Corl get_corl(std::uint64_t since_seq = 0) const;

  void spawn_service(const fabric::Address& addr);

  component::ComponentContext& context() { return *ctx_; }

 private:
  void append_entry(const crypto::Digest256& target);
  void require_revocable(const crypto::Digest256& target) const;
  void serve_channel(channel::SecureChannel& ch);

  component::ComponentPtr ctx_;
  RevokerPolicy policy_;
  mutable std::mutex mu_;
  certs::Corl corl_;
  std::map<std::string, std::set<Bytes>> requests_;  // target hex -> keys
};

}  // namespace decent::revoker
