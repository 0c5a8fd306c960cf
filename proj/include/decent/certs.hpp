// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "decent/authlist.hpp"
#include "decent/ias.hpp"

// Certificate formats and the chain verifier. A peer presents one chain:
//
//   SA certificate (issuer enclave, rooted in an attestation report)
//     -> component certificate (key + measurement + authorization list)
//     -> optional verified-app certificate (dynamic authorization),
//        in which case the verifier's own chain travels alongside.
//
// verify_chain is a pure function of its inputs and is the single place
// where connection acceptance is decided.
namespace decent::certs {

struct SaCertificate {
  Bytes server_public_key;
  ias::IasReport ias_report;  // its quote binds the server key fingerprint
  Micros not_before = 0;
  Micros not_after = 0;
  Bytes self_signature;

  Bytes signed_payload() const;
  Bytes encode() const;
  static SaCertificate decode(ByteView data);
};

struct ComponentCertificate {
  Bytes component_public_key;
  crypto::Digest256 component_measurement;
  Bytes authlist_bytes;  // full canonical encoding, no side channel needed
  Micros issued_at = 0;
  Bytes signature;  // by the issuing server key

  Bytes signed_payload() const;
  Bytes encode() const;
  static ComponentCertificate decode(ByteView data);
};

struct VerifiedAppCertificate {
  Bytes component_public_key;
  crypto::Digest256 component_measurement;
  Bytes authlist_bytes;
  std::string target_service;
  Bytes signature;  // by the verifier's component key

  Bytes signed_payload() const;
  Bytes encode() const;
  static VerifiedAppCertificate decode(ByteView data);
};

struct CertChain {
  SaCertificate sa;
  ComponentCertificate component;
  std::optional<VerifiedAppCertificate> verified;
  // Full chain of the verifier that signed `verified`; transmitted inline so
  // acceptors need no side channel.
  std::shared_ptr<const CertChain> verifier_chain;

  Bytes encode() const;
  static CertChain decode(ByteView data);
};

enum class RejectReason : std::uint8_t {
  None = 0,
  BadSaSignature,
  Expired,
  BadIasSignature,
  IasVerdictNotOk,
  FingerprintMismatch,
  ServerNotAuthorized,
  BadComponentSignature,
  AuthListMismatch,
  ServiceNotAuthorized,
  BadVerifierChain,
  VerifierServiceMismatch,
  Revoked,
};

const char* to_string(RejectReason r);

// Verified output of a successful chain check.
struct PeerIdentity {
  crypto::Digest256 measurement;
  Bytes public_key;
  std::string service;
  crypto::Digest256 authlist_hash;  // hash of the chain's authlist bytes
  bool via_verifier = false;
};

// Local view of component revocations (union over configured revokers).
struct CorlView {
  std::unordered_set<crypto::Digest256, crypto::Digest256Hash> revoked;

  bool is_revoked(const crypto::Digest256& d) const {
    return revoked.count(d) > 0;
  }
};

// Signed, append-only component revocation list as published by a revoker:
// entries(seq) is a prefix of entries(seq') for seq < seq'.
struct Corl {
  crypto::Digest256 revoker_identity;  // revoker measurement
  std::uint64_t seq = 0;
  std::vector<crypto::Digest256> entries;
  Bytes signature;  // by the revoker's component key

  Bytes signed_payload() const;
  Bytes encode() const;
  static Corl decode(ByteView data);
};

struct ChainExpectation {
  std::string expected_service;
  // Name under which a verifier of `expected_service` components must be
  // listed; absent means only directly listed peers are acceptable.
  std::optional<std::string> verifier_service;
  // One further level: name of a verifier allowed to authorize the verifier
  // itself. Absent for the common case of directly listed verifiers.
  std::optional<std::string> verifier_of_verifier_service;
};

struct VerifyContext {
  const authlist::AuthList* local_authlist = nullptr;
  ByteView authority_key;
  const CorlView* corl = nullptr;  // null means an empty view
  Micros now = 0;
  // Services never checked against the revocation list.
  std::vector<std::string> revocation_exempt{
      std::string(authlist::kRevokerService)};
};

struct ChainResult {
  RejectReason reason = RejectReason::None;
  std::optional<PeerIdentity> peer;

  bool ok() const { return reason == RejectReason::None; }
};

ChainResult verify_chain(const CertChain& chain, const ChainExpectation& expect,
                         const VerifyContext& ctx);

// Issuance-time prefix: structural and authorization-list checks only, no
// service authorization and no revocation consultation. Used by verifiers
// vetting candidate chains and by revokers validating compromise evidence.
ChainResult verify_chain_for_issuance(const CertChain& chain,
                                      const VerifyContext& ctx);

// Signature-validity-only variant for open services accepting an optional
// client chain: checks the issuer chain and key binding but consults no
// authorization list.
ChainResult verify_chain_signatures_only(const CertChain& chain,
                                         const VerifyContext& ctx);

// Test instrumentation: number of verify_chain invocations (resumption tests
// assert this stays flat).
std::uint64_t verify_chain_calls();

}  // namespace decent::certs
