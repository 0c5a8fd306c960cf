// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/verifier.hpp"

#include "decent/wire.hpp"

namespace decent::verifier {

namespace {
constexpr std::string_view kApprovalDomain = "decent-approve-v1";

std::string approval_key(const crypto::Digest256& measurement,
                         const std::string& service) {
  return measurement.hex() + "|" + service;
}
}  // namespace

Bytes StakeholderApproval::signed_payload() const {
  Bytes payload = to_bytes(kApprovalDomain);
  append(payload, approved_measurement.view());
  append(payload, to_bytes(target_service));
  return payload;
}

Bytes StakeholderApproval::encode() const {
  tlv::Writer w;
  w.field(1, stakeholder_public_key);
  w.field(2, approved_measurement.view());
  w.field_str(3, target_service);
  w.field(4, signature);
  return w.take();
}

StakeholderApproval StakeholderApproval::decode(ByteView data) {
  tlv::Reader r(data);
  StakeholderApproval a;
  ByteView v = r.field(1);
  a.stakeholder_public_key.assign(v.begin(), v.end());
  a.approved_measurement = crypto::Digest256::from_bytes(r.field(2));
  a.target_service = r.field_str(3);
  v = r.field(4);
  a.signature.assign(v.begin(), v.end());
  r.finish();
  return a;
}

StakeholderApproval StakeholderApproval::make(
    const crypto::SigningKeyPair& stakeholder,
    const crypto::Digest256& measurement, const std::string& service) {
  StakeholderApproval a;
  a.stakeholder_public_key = stakeholder.public_key;
  a.approved_measurement = measurement;
  a.target_service = service;
  a.signature = crypto::sign(stakeholder.private_key, a.signed_payload());
  return a;
}

VerifierService::VerifierService(component::ComponentPtr ctx,
                                 VerifierPolicy policy)
    : ctx_(std::move(ctx)), policy_(std::move(policy)) {}

void VerifierService::submit_approval(const StakeholderApproval& approval) {
  bool known = false;
  for (const auto& key : policy_.stakeholder_keys) {
    if (key == approval.stakeholder_public_key) {
      known = true;
      break;
    }
  }
  if (!known) {
    throw VerifierError(VerifierError::Kind::UnknownStakeholder,
                        certs::RejectReason::None,
                        "approval from unknown stakeholder");
  }
  if (!crypto::verify(approval.stakeholder_public_key,
                      approval.signed_payload(), approval.signature)) {
    throw VerifierError(VerifierError::Kind::BadSignature,
                        certs::RejectReason::None,
                        "approval signature invalid");
  }
  std::lock_guard lock(mu_);
  approvals_[approval_key(approval.approved_measurement,
                          approval.target_service)]
      .insert(approval.stakeholder_public_key);
}

std::size_t VerifierService::approval_count(
    const crypto::Digest256& measurement, const std::string& service) const {
  std::lock_guard lock(mu_);
  auto it = approvals_.find(approval_key(measurement, service));
  return it == approvals_.end() ? 0 : it->second.size();
}

certs::VerifiedAppCertificate VerifierService::request_verification(
    const certs::CertChain& candidate, const std::string& target_service) {
  certs::VerifyContext vctx;
  vctx.local_authlist = &ctx_->list();
  vctx.authority_key = ctx_->authority_key();
  vctx.now = ctx_->trusted_now();
  certs::ChainResult vetted = certs::verify_chain_for_issuance(candidate, vctx);
  if (!vetted.ok()) {
    throw VerifierError(VerifierError::Kind::ChainRejected, vetted.reason,
                        std::string("candidate chain rejected: ") +
                            certs::to_string(vetted.reason));
  }

  if (approval_count(vetted.peer->measurement, target_service) <
      policy_.threshold) {
    throw VerifierError(VerifierError::Kind::InsufficientApprovals,
                        certs::RejectReason::None,
                        "approvals below threshold");
  }

  certs::VerifiedAppCertificate cert;
  cert.component_public_key = candidate.component.component_public_key;
  cert.component_measurement = candidate.component.component_measurement;
  cert.authlist_bytes = candidate.component.authlist_bytes;
  cert.target_service = target_service;
  cert.signature =
      crypto::sign(ctx_->keypair().private_key, cert.signed_payload());
  return cert;
}

void VerifierService::serve_channel(channel::SecureChannel& ch) {
  for (;;) {
    Bytes payload;
    try {
      payload = ch.recv();
    } catch (const fabric::TransportError&) {
      return;
    } catch (const channel::RecordError&) {
      return;
    }
    try {
      auto [kind, body] = wire::split_msg(payload);
      if (kind == wire::kMsgApprovalSubmit) {
        tlv::Reader r(body);
        auto approval = StakeholderApproval::decode(r.field(1));
        r.finish();
        submit_approval(approval);
        ch.send(wire::encode_msg(wire::kMsgOk, {}));
      } else if (kind == wire::kMsgVerifyReq) {
        tlv::Reader r(body);
        auto candidate = certs::CertChain::decode(r.field(1));
        std::string service = r.field_str(2);
        r.finish();
        // The requester must hold the key it wants certified; the open-mode
        // handshake proved possession of the peer key.
        if (!ch.peer() ||
            ch.peer()->public_key != candidate.component.component_public_key) {
          throw VerifierError(VerifierError::Kind::KeyMismatch,
                              certs::RejectReason::None,
                              "requester key does not match candidate");
        }
        auto cert = request_verification(candidate, service);
        tlv::Writer w;
        w.field(1, cert.encode());
        // The holder presents our chain alongside the issued certificate.
        w.field(2, ctx_->chain()->encode());
        ch.send(wire::encode_msg(wire::kMsgVerifyResp, w.bytes()));
      } else {
        ch.send(wire::encode_msg(wire::kMsgError, {}));
      }
    } catch (const VerifierError& e) {
      tlv::Writer w;
      w.field_u8(1, static_cast<std::uint8_t>(e.kind));
      w.field_u8(2, static_cast<std::uint8_t>(e.reason));
      ch.send(wire::encode_msg(wire::kMsgError, w.bytes()));
    } catch (const tlv::MalformedEncoding&) {
      ch.send(wire::encode_msg(wire::kMsgError, {}));
    }
  }
}

void VerifierService::spawn_service(const fabric::Address& addr) {
  auto listener = ctx_->fabric().listen(addr);
  ctx_->fabric().spawn(addr.node + "/verifier", [this, listener] {
    for (;;) {
      fabric::ConnPtr conn;
      try {
        conn = listener->accept();
      } catch (const fabric::TransportError&) {
        return;
      }
      try {
        auto config = ctx_->accept_config(channel::Mode::AcceptOpenService, "");
        auto ch = ctx_->accept(conn, config);
        serve_channel(*ch);
        ch->close();
      } catch (const channel::HandshakeError&) {
      } catch (const channel::ResumeError&) {
      } catch (const channel::RecordError&) {
      } catch (const fabric::TransportError&) {
      } catch (const component::ComponentShutDown&) {
        return;
      }
    }
  });
}

}  // namespace decent::verifier
