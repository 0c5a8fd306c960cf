// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/revoker.hpp"

#include "decent/wire.hpp"

namespace decent::revoker {

namespace {
constexpr std::string_view kRevokeDomain = "decent-revoke-v1";
constexpr std::string_view kEvidenceProbe = "decent-key-evidence-v1";
}  // namespace

Bytes RevocationRequest::signed_payload() const {
  Bytes payload = to_bytes(kRevokeDomain);
  append(payload, target_measurement.view());
  return payload;
}

Bytes RevocationRequest::encode() const {
  tlv::Writer w;
  w.field(1, stakeholder_public_key);
  w.field(2, target_measurement.view());
  w.field(3, signature);
  return w.take();
}

RevocationRequest RevocationRequest::decode(ByteView data) {
  tlv::Reader r(data);
  RevocationRequest req;
  ByteView v = r.field(1);
  req.stakeholder_public_key.assign(v.begin(), v.end());
  req.target_measurement = crypto::Digest256::from_bytes(r.field(2));
  v = r.field(3);
  req.signature.assign(v.begin(), v.end());
  r.finish();
  return req;
}

RevocationRequest RevocationRequest::make(
    const crypto::SigningKeyPair& stakeholder,
    const crypto::Digest256& target) {
  RevocationRequest req;
  req.stakeholder_public_key = stakeholder.public_key;
  req.target_measurement = target;
  req.signature = crypto::sign(stakeholder.private_key, req.signed_payload());
  return req;
}

RevokerService::RevokerService(component::ComponentPtr ctx,
                               RevokerPolicy policy)
    : ctx_(std::move(ctx)), policy_(std::move(policy)) {
  corl_.revoker_identity = ctx_->measurement();
  corl_.seq = 0;
  corl_.signature =
      crypto::sign(ctx_->keypair().private_key, corl_.signed_payload());
}

void RevokerService::require_revocable(const crypto::Digest256& target) const {
  const authlist::AuthList& list = ctx_->list();
  if (list.authorizes(target, authlist::kRevokerService)) {
    throw RevokerError(RevokerError::Kind::TargetProtected,
                       "digest serves as a revoker");
  }
  for (const auto& name : policy_.verifier_of_revoker_services) {
    if (list.authorizes(target, name)) {
      throw RevokerError(RevokerError::Kind::TargetProtected,
                         "digest serves as a revoker verifier");
    }
  }
}

void RevokerService::append_entry(const crypto::Digest256& target) {
  std::lock_guard lock(mu_);
  for (const auto& e : corl_.entries) {
    if (e == target) return;  // idempotent
  }
  corl_.entries.push_back(target);
  ++corl_.seq;
  corl_.signature =
      crypto::sign(ctx_->keypair().private_key, corl_.signed_payload());
}

void RevokerService::submit_revocation(const RevocationRequest& request) {
  bool known = false;
  for (const auto& key : policy_.stakeholder_keys) {
    if (key == request.stakeholder_public_key) {
      known = true;
      break;
    }
  }
  if (!known) {
    throw RevokerError(RevokerError::Kind::UnknownStakeholder,
                       "request from unknown stakeholder");
  }
  if (!crypto::verify(request.stakeholder_public_key, request.signed_payload(),
                      request.signature)) {
    throw RevokerError(RevokerError::Kind::BadSignature,
                       "request signature invalid");
  }
  require_revocable(request.target_measurement);

  std::size_t distinct = 0;
  {
    std::lock_guard lock(mu_);
    auto& keys = requests_[request.target_measurement.hex()];
    keys.insert(request.stakeholder_public_key);
    distinct = keys.size();
  }
  if (distinct >= policy_.threshold) {
    append_entry(request.target_measurement);
  }
}

void RevokerService::submit_key_evidence(ByteView private_key_bytes,
                                         const certs::CertChain& claimed_chain) {
  // The key must actually sign for the chain's component key.
  if (private_key_bytes.size() != crypto::kPrivateKeySize) {
    throw RevokerError(RevokerError::Kind::EvidenceInvalid,
                       "submitted key is malformed");
  }
  Bytes probe = to_bytes(kEvidenceProbe);
  Bytes sig;
  try {
    sig = crypto::sign(Bytes(private_key_bytes.begin(), private_key_bytes.end()),
                       probe);
  } catch (const std::invalid_argument&) {
    throw RevokerError(RevokerError::Kind::EvidenceInvalid,
                       "submitted key is malformed");
  }
  if (!crypto::verify(claimed_chain.component.component_public_key, probe,
                      sig)) {
    throw RevokerError(RevokerError::Kind::EvidenceInvalid,
                       "key does not match the claimed chain");
  }
  // And the chain itself must be a valid credential for this instance;
  // otherwise the evidence proves nothing about an authorized component.
  certs::VerifyContext vctx;
  vctx.local_authlist = &ctx_->list();
  vctx.authority_key = ctx_->authority_key();
  vctx.now = ctx_->trusted_now();
  certs::ChainResult vetted =
      certs::verify_chain_for_issuance(claimed_chain, vctx);
  if (!vetted.ok()) {
    throw RevokerError(RevokerError::Kind::EvidenceInvalid,
                       std::string("claimed chain invalid: ") +
                           certs::to_string(vetted.reason));
  }
  require_revocable(claimed_chain.component.component_measurement);
  append_entry(claimed_chain.component.component_measurement);
}

certs::Corl RevokerService::get_corl(std::uint64_t since_seq) const {
  (void)since_seq;  // full list is authoritative
  std::lock_guard lock(mu_);
  return corl_;
}

void RevokerService::serve_channel(channel::SecureChannel& ch) {
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
      if (kind == wire::kMsgCorlReq) {
        tlv::Reader r(body);
        std::uint64_t since = r.field_u64(1);
        r.finish();
        tlv::Writer w;
        w.field(1, get_corl(since).encode());
        ch.send(wire::encode_msg(wire::kMsgCorlResp, w.bytes()));
      } else if (kind == wire::kMsgRevokeSubmit) {
        tlv::Reader r(body);
        auto request = RevocationRequest::decode(r.field(1));
        r.finish();
        submit_revocation(request);
        ch.send(wire::encode_msg(wire::kMsgOk, {}));
      } else if (kind == wire::kMsgEvidenceSubmit) {
        tlv::Reader r(body);
        ByteView key = r.field(1);
        auto chain = certs::CertChain::decode(r.field(2));
        r.finish();
        submit_key_evidence(key, chain);
        ch.send(wire::encode_msg(wire::kMsgOk, {}));
      } else {
        ch.send(wire::encode_msg(wire::kMsgError, {}));
      }
    } catch (const RevokerError& e) {
      tlv::Writer w;
      w.field_u8(1, static_cast<std::uint8_t>(e.kind));
      ch.send(wire::encode_msg(wire::kMsgError, w.bytes()));
    } catch (const tlv::MalformedEncoding&) {
      ch.send(wire::encode_msg(wire::kMsgError, {}));
    }
  }
}

void RevokerService::spawn_service(const fabric::Address& addr) {
  auto listener = ctx_->fabric().listen(addr);
  ctx_->fabric().spawn(addr.node + "/revoker", [this, listener] {
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

}  // namespace decent::revoker
