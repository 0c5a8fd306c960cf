// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/certs.hpp"

#include <algorithm>
#include <atomic>

#include "decent/tlv.hpp"

namespace decent::certs {

namespace {

constexpr std::string_view kSaDomain = "decent-sa-cert-v1";
constexpr std::string_view kComponentDomain = "decent-component-cert-v1";
constexpr std::string_view kVerifiedDomain = "decent-verified-cert-v1";

std::atomic<std::uint64_t> g_verify_calls{0};

Bytes view_to_bytes(ByteView v) { return Bytes(v.begin(), v.end()); }

// How much of the check sequence to run.
enum class Depth {
  SignaturesOnly,   // structural validity and key binding
  ThroughAuthList,  // + server authorization and authlist equality
  Full,             // + service authorization and revocation
};

struct CheckState {
  // Measurements involved in the chain, for the final revocation pass.
  std::vector<crypto::Digest256> measurements;
};

ChainResult reject(RejectReason r) { return ChainResult{r, std::nullopt}; }

ChainResult check_chain(const CertChain& chain, const ChainExpectation& expect,
                        const VerifyContext& ctx, Depth depth,
                        bool allow_verifier_path, CheckState& state) {
  const SaCertificate& sa = chain.sa;

  // Issuer certificate: self signature, validity window.
  if (!crypto::verify(sa.server_public_key, sa.signed_payload(),
                      sa.self_signature)) {
    return reject(RejectReason::BadSaSignature);
  }
  if (ctx.now < sa.not_before || ctx.now > sa.not_after) {
    return reject(RejectReason::Expired);
  }

  // Attestation report: authority signature and verdict.
  if (!crypto::verify(ctx.authority_key, sa.ias_report.signed_payload(),
                      sa.ias_report.signature)) {
    return reject(RejectReason::BadIasSignature);
  }
  if (sa.ias_report.verdict != ias::Verdict::Ok) {
    return reject(RejectReason::IasVerdictNotOk);
  }

  // The report must bind the issuer key: its quote carries the key
  // fingerprint in the leading 32 bytes of report data.
  const auto& rd = sa.ias_report.quote.report_data;
  crypto::Digest256 fp = crypto::key_fingerprint(sa.server_public_key);
  if (!std::equal(fp.bytes.begin(), fp.bytes.end(), rd.begin())) {
    return reject(RejectReason::FingerprintMismatch);
  }

  const crypto::Digest256& server_measurement = sa.ias_report.quote.measurement;
  state.measurements.push_back(server_measurement);

  if (depth != Depth::SignaturesOnly) {
    // The issuing enclave itself must be authorized.
    if (!ctx.local_authlist->authorizes(
            server_measurement, authlist::kServerService)) {
      return reject(RejectReason::ServerNotAuthorized);
    }
  }

  // Component certificate signature.
  const ComponentCertificate& comp = chain.component;
  if (!crypto::verify(sa.server_public_key, comp.signed_payload(),
                      comp.signature)) {
    return reject(RejectReason::BadComponentSignature);
  }
  state.measurements.push_back(comp.component_measurement);

  if (depth == Depth::SignaturesOnly) {
    PeerIdentity peer;
    peer.measurement = comp.component_measurement;
    peer.public_key = comp.component_public_key;
    peer.service.clear();
    peer.authlist_hash = crypto::hash(comp.authlist_bytes);
    peer.via_verifier = false;
    return ChainResult{RejectReason::None, peer};
  }

  // Authorization lists must match byte for byte — or, for a stateless open
  // service, match the nested definition our list carries for this entry.
  bool authlist_ok = comp.authlist_bytes == ctx.local_authlist->encoded();
  if (!authlist_ok && depth == Depth::Full) {
    auto nested = ctx.local_authlist->nested_definition(
        comp.component_measurement, expect.expected_service);
    if (nested && comp.authlist_bytes == nested->encoded()) {
      authlist_ok = true;
    }
  }
  if (!authlist_ok) {
    return reject(RejectReason::AuthListMismatch);
  }

  PeerIdentity peer;
  peer.measurement = comp.component_measurement;
  peer.public_key = comp.component_public_key;
  peer.authlist_hash = crypto::hash(comp.authlist_bytes);
  peer.via_verifier = false;

  if (depth == Depth::ThroughAuthList) {
    return ChainResult{RejectReason::None, peer};
  }

  peer.service = expect.expected_service;

  // Service authorization: directly listed, or vouched for by a listed
  // verifier. Issuer enclaves can never take the verifier path.
  if (!ctx.local_authlist->authorizes(comp.component_measurement,
                                      expect.expected_service)) {
    bool verifier_path_open =
        allow_verifier_path && chain.verified.has_value() &&
        expect.verifier_service.has_value() &&
        expect.expected_service != authlist::kServerService;
    if (!verifier_path_open) {
      return reject(RejectReason::ServiceNotAuthorized);
    }

    const VerifiedAppCertificate& va = *chain.verified;
    if (va.component_public_key != comp.component_public_key ||
        va.component_measurement != comp.component_measurement ||
        va.authlist_bytes != comp.authlist_bytes) {
      return reject(RejectReason::BadVerifierChain);
    }
    if (!chain.verifier_chain) {
      return reject(RejectReason::BadVerifierChain);
    }

    ChainExpectation verifier_expect;
    verifier_expect.expected_service = *expect.verifier_service;
    verifier_expect.verifier_service = expect.verifier_of_verifier_service;
    ChainResult verifier_result =
        check_chain(*chain.verifier_chain, verifier_expect, ctx, Depth::Full,
                    expect.verifier_of_verifier_service.has_value(), state);
    if (!verifier_result.ok()) {
      return reject(RejectReason::BadVerifierChain);
    }
    if (!crypto::verify(verifier_result.peer->public_key, va.signed_payload(),
                        va.signature)) {
      return reject(RejectReason::BadVerifierChain);
    }
    if (va.target_service != expect.expected_service) {
      return reject(RejectReason::VerifierServiceMismatch);
    }
    peer.via_verifier = true;
  }

  return ChainResult{RejectReason::None, peer};
}

}  // namespace

Bytes SaCertificate::signed_payload() const {
  Bytes payload = to_bytes(kSaDomain);
  append(payload, server_public_key);
  append(payload, ias_report.encode());
  store_u64be(payload, not_before);
  store_u64be(payload, not_after);
  return payload;
}

Bytes SaCertificate::encode() const {
  tlv::Writer w;
  w.field(1, server_public_key);
  w.field(2, ias_report.encode());
  w.field_u64(3, not_before);
  w.field_u64(4, not_after);
  w.field(5, self_signature);
  return w.take();
}

SaCertificate SaCertificate::decode(ByteView data) {
  tlv::Reader r(data);
  SaCertificate cert;
  cert.server_public_key = view_to_bytes(r.field(1));
  cert.ias_report = ias::IasReport::decode(r.field(2));
  cert.not_before = r.field_u64(3);
  cert.not_after = r.field_u64(4);
  cert.self_signature = view_to_bytes(r.field(5));
  r.finish();
  return cert;
}

Bytes ComponentCertificate::signed_payload() const {
  Bytes payload = to_bytes(kComponentDomain);
  append(payload, component_public_key);
  append(payload, component_measurement.view());
  append(payload, authlist_bytes);
  store_u64be(payload, issued_at);
  return payload;
}

Bytes ComponentCertificate::encode() const {
  tlv::Writer w;
  w.field(1, component_public_key);
  w.field(2, component_measurement.view());
  w.field(3, authlist_bytes);
  w.field_u64(4, issued_at);
  w.field(5, signature);
  return w.take();
}

ComponentCertificate ComponentCertificate::decode(ByteView data) {
  tlv::Reader r(data);
  ComponentCertificate cert;
  cert.component_public_key = view_to_bytes(r.field(1));
  cert.component_measurement = crypto::Digest256::from_bytes(r.field(2));
  cert.authlist_bytes = view_to_bytes(r.field(3));
  cert.issued_at = r.field_u64(4);
  cert.signature = view_to_bytes(r.field(5));
  r.finish();
  return cert;
}

Bytes VerifiedAppCertificate::signed_payload() const {
  Bytes payload = to_bytes(kVerifiedDomain);
  append(payload, component_public_key);
  append(payload, component_measurement.view());
  append(payload, authlist_bytes);
  append(payload, to_bytes(target_service));
  return payload;
}

Bytes VerifiedAppCertificate::encode() const {
  tlv::Writer w;
  w.field(1, component_public_key);
  w.field(2, component_measurement.view());
  w.field(3, authlist_bytes);
  w.field_str(4, target_service);
  w.field(5, signature);
  return w.take();
}

VerifiedAppCertificate VerifiedAppCertificate::decode(ByteView data) {
  tlv::Reader r(data);
  VerifiedAppCertificate cert;
  cert.component_public_key = view_to_bytes(r.field(1));
  cert.component_measurement = crypto::Digest256::from_bytes(r.field(2));
  cert.authlist_bytes = view_to_bytes(r.field(3));
  cert.target_service = r.field_str(4);
  if (!authlist::ServiceName::is_valid(cert.target_service)) {
    throw tlv::MalformedEncoding("bad target service name");
  }
  cert.signature = view_to_bytes(r.field(5));
  r.finish();
  return cert;
}

Bytes CertChain::encode() const {
  tlv::Writer w;
  w.field(1, sa.encode());
  w.field(2, component.encode());
  if (verified) {
    w.field(3, verified->encode());
  }
  if (verifier_chain) {
    w.field(4, verifier_chain->encode());
  }
  return w.take();
}

CertChain CertChain::decode(ByteView data) {
  tlv::Reader r(data);
  CertChain chain;
  chain.sa = SaCertificate::decode(r.field(1));
  chain.component = ComponentCertificate::decode(r.field(2));
  if (auto v = r.maybe_field(3)) {
    chain.verified = VerifiedAppCertificate::decode(*v);
  }
  if (auto v = r.maybe_field(4)) {
    chain.verifier_chain = std::make_shared<CertChain>(CertChain::decode(*v));
  }
  r.finish();
  return chain;
}

Bytes Corl::signed_payload() const {
  Bytes payload = to_bytes(std::string_view("decent-corl-v1"));
  append(payload, revoker_identity.view());
  store_u64be(payload, seq);
  for (const auto& e : entries) append(payload, e.view());
  return payload;
}

Bytes Corl::encode() const {
  tlv::Writer w;
  w.field(1, revoker_identity.view());
  w.field_u64(2, seq);
  Bytes flat;
  for (const auto& e : entries) append(flat, e.view());
  w.field(3, flat);
  w.field(4, signature);
  return w.take();
}

Corl Corl::decode(ByteView data) {
  tlv::Reader r(data);
  Corl corl;
  corl.revoker_identity = crypto::Digest256::from_bytes(r.field(1));
  corl.seq = r.field_u64(2);
  ByteView flat = r.field(3);
  if (flat.size() % crypto::kDigestSize != 0) {
    throw tlv::MalformedEncoding("revocation entries not digest-aligned");
  }
  for (std::size_t i = 0; i < flat.size(); i += crypto::kDigestSize) {
    corl.entries.push_back(
        crypto::Digest256::from_bytes(flat.subspan(i, crypto::kDigestSize)));
  }
  ByteView sig = r.field(4);
  corl.signature.assign(sig.begin(), sig.end());
  r.finish();
  return corl;
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::None:
      return "ACCEPTED";
    case RejectReason::BadSaSignature:
      return "BAD_SA_SIGNATURE";
    case RejectReason::Expired:
      return "EXPIRED";
    case RejectReason::BadIasSignature:
      return "BAD_IAS_SIGNATURE";
    case RejectReason::IasVerdictNotOk:
      return "IAS_VERDICT_NOT_OK";
    case RejectReason::FingerprintMismatch:
      return "FINGERPRINT_MISMATCH";
    case RejectReason::ServerNotAuthorized:
      return "SERVER_NOT_AUTHORIZED";
    case RejectReason::BadComponentSignature:
      return "BAD_COMPONENT_SIGNATURE";
    case RejectReason::AuthListMismatch:
      return "AUTHLIST_MISMATCH";
    case RejectReason::ServiceNotAuthorized:
      return "SERVICE_NOT_AUTHORIZED";
    case RejectReason::BadVerifierChain:
      return "BAD_VERIFIER_CHAIN";
    case RejectReason::VerifierServiceMismatch:
      return "VERIFIER_SERVICE_MISMATCH";
    case RejectReason::Revoked:
      return "REVOKED";
  }
  return "UNKNOWN";
}

ChainResult verify_chain(const CertChain& chain, const ChainExpectation& expect,
                         const VerifyContext& ctx) {
  g_verify_calls.fetch_add(1, std::memory_order_relaxed);
  CheckState state;
  ChainResult result =
      check_chain(chain, expect, ctx, Depth::Full, true, state);
  if (!result.ok()) {
    return result;
  }

  bool exempt =
      std::find(ctx.revocation_exempt.begin(), ctx.revocation_exempt.end(),
                expect.expected_service) != ctx.revocation_exempt.end();
  if (!exempt && ctx.corl) {
    for (const auto& m : state.measurements) {
      if (ctx.corl->is_revoked(m)) {
        return reject(RejectReason::Revoked);
      }
    }
  }
  return result;
}

ChainResult verify_chain_for_issuance(const CertChain& chain,
                                      const VerifyContext& ctx) {
  g_verify_calls.fetch_add(1, std::memory_order_relaxed);
  CheckState state;
  ChainExpectation none;
  return check_chain(chain, none, ctx, Depth::ThroughAuthList, false, state);
}

ChainResult verify_chain_signatures_only(const CertChain& chain,
                                         const VerifyContext& ctx) {
  g_verify_calls.fetch_add(1, std::memory_order_relaxed);
  CheckState state;
  ChainExpectation none;
  return check_chain(chain, none, ctx, Depth::SignaturesOnly, false, state);
}

std::uint64_t verify_chain_calls() {
  return g_verify_calls.load(std::memory_order_relaxed);
}

}  // namespace decent::certs
