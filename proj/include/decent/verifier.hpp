// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <set>

#include "decent/component.hpp"

// Dynamic authorization: a verifier component signs verified-app
// certificates for candidate components once a threshold of stakeholder
// approvals has been collected, and only when the candidate loaded exactly
// the verifier's own authorization list.
namespace decent::verifier {

struct StakeholderApproval {
  Bytes stakeholder_public_key;
  crypto::Digest256 approved_measurement;
  std::string target_service;
  Bytes signature;  // over (measurement, service)

  Bytes signed_payload() const;
  Bytes encode() const;
  static StakeholderApproval decode(ByteView data);

  static StakeholderApproval make(const crypto::SigningKeyPair& stakeholder,
                                  const crypto::Digest256& measurement,
                                  const std::string& service);
};

struct VerifierPolicy {
  std::vector<Bytes> stakeholder_keys;
  std::size_t threshold = 1;
};

class VerifierError : public std::runtime_error {
 public:
  enum class Kind {
    UnknownStakeholder,
    BadSignature,
    InsufficientApprovals,
    ChainRejected,  // `reason` holds the chain verdict
    KeyMismatch,    // requester does not hold the candidate key
  };

  VerifierError(Kind kind, certs::RejectReason reason,
                const std::string& what)
      : std::runtime_error("verifier: " + what), kind(kind), reason(reason) {}

  Kind kind;
  certs::RejectReason reason;
};

class VerifierService {
 public:
  VerifierService(component::ComponentPtr ctx, VerifierPolicy policy);

  // Records one approval; idempotent per (stakeholder, measurement, service).
  void submit_approval(const StakeholderApproval& approval);

  // Vets the candidate chain (structure, issuer authorization, byte-equal
  // authorization list) and checks the approval threshold, then signs.
  certs::VerifiedAppCertificate request_verification(
      const certs::CertChain& candidate, const std::string& target_service);

  std::size_t approval_count(const crypto::Digest256& measurement,
                             const std::string& service) const;

  // Serves approval submissions and verification requests at `addr`.
  // Requesters connect with their (unauthorized) chains; the listener
  // accepts in open mode and validates chain signatures only.
  void spawn_service(const fabric::Address& addr);

  component::ComponentContext& context() { return *ctx_; }

 private:
  void serve_channel(channel::SecureChannel& ch);

  component::ComponentPtr ctx_;
  VerifierPolicy policy_;
  mutable std::mutex mu_;
  // (measurement hex | service) -> approving stakeholder keys
  std::map<std::string, std::set<Bytes>> approvals_;
};

}  // namespace decent::verifier
