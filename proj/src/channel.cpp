// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/channel.hpp"

#include <algorithm>

#include "decent/tlv.hpp"
#include "decent/wire.hpp"

namespace decent::channel {

namespace {

constexpr std::uint8_t kProtocolVersion = 1;

// Record types.
constexpr std::uint8_t kRecHsM1 = 1;
constexpr std::uint8_t kRecHsM2 = 2;
constexpr std::uint8_t kRecHsM3 = 3;
constexpr std::uint8_t kRecData = 4;
constexpr std::uint8_t kRecResumeReq = 5;
constexpr std::uint8_t kRecResumeAck = 6;
constexpr std::uint8_t kRecTicket = 7;
constexpr std::uint8_t kRecAlert = 8;
constexpr std::uint8_t kRecResumeConfirm = 9;

// Alert codes beyond RejectReason values.
constexpr std::uint8_t kAlertProtocol = 200;
constexpr std::uint8_t kAlertTranscript = 201;
constexpr std::uint8_t kAlertExpiredTicket = 210;
constexpr std::uint8_t kAlertUnknownTicketKey = 211;
constexpr std::uint8_t kAlertRevokedTicket = 212;

constexpr std::string_view kTranscriptDomain1 = "decent-hs-transcript-1";
constexpr std::string_view kTranscriptDomain2 = "decent-hs-transcript-2";
constexpr std::string_view kMasterInfo = "decent-hs-v1";
constexpr std::string_view kResumeInfo = "resume-v1";
constexpr std::string_view kTicketAd = "decent-ticket-v1";

const std::array<std::uint8_t, 4> kDirC2s = {'c', '2', 's', 0};
const std::array<std::uint8_t, 4> kDirS2c = {'s', '2', 'c', 0};

bool record_is_encrypted(std::uint8_t type) {
  return type == kRecData || type == kRecTicket || type == kRecResumeConfirm;
}

void send_frame(const fabric::ConnPtr& conn, std::uint8_t type, ByteView body) {
  wire::send_frame(conn, type, body);
}

std::pair<std::uint8_t, Bytes> recv_frame(const fabric::ConnPtr& conn,
                                          Micros timeout) {
  try {
    return wire::recv_frame(conn, timeout);
  } catch (const tlv::MalformedEncoding& e) {
    throw RecordError(RecordError::Kind::Protocol, e.what());
  }
}

void send_alert(const fabric::ConnPtr& conn, std::uint8_t code) {
  tlv::Writer w;
  w.field_u8(1, code);
  send_frame(conn, kRecAlert, w.bytes());
}

[[noreturn]] void raise_remote_alert(ByteView body) {
  std::uint8_t code = kAlertProtocol;
  try {
    tlv::Reader r(body);
    code = r.field_u8(1);
    r.finish();
  } catch (const tlv::MalformedEncoding&) {
  }
  switch (code) {
    case kAlertTranscript:
      throw HandshakeError(HandshakeError::Kind::TranscriptAuth,
                           certs::RejectReason::None,
                           "peer reported transcript failure");
    case kAlertProtocol:
      throw HandshakeError(HandshakeError::Kind::Protocol,
                           certs::RejectReason::None, "peer reported protocol error");
    case kAlertExpiredTicket:
      throw ResumeError(ResumeError::Kind::ExpiredTicket, true,
                        "peer reported expired ticket");
    case kAlertUnknownTicketKey:
      throw ResumeError(ResumeError::Kind::UnknownTicketKey, true,
                        "peer reported unknown ticket key");
    case kAlertRevokedTicket:
      throw ResumeError(ResumeError::Kind::Revoked, true,
                        "peer reported revoked session");
    default:
      if (code >= 1 &&
          code <= static_cast<std::uint8_t>(certs::RejectReason::Revoked)) {
        auto reason = static_cast<certs::RejectReason>(code);
        throw HandshakeError(HandshakeError::Kind::RemoteReject, reason,
                             std::string("peer rejected our chain: ") +
                                 certs::to_string(reason));
      }
      throw HandshakeError(HandshakeError::Kind::Protocol,
                           certs::RejectReason::None, "unknown alert code");
  }
}

Bytes record_nonce(const std::array<std::uint8_t, 4>& dir, std::uint64_t seq) {
  Bytes nonce(dir.begin(), dir.end());
  store_u64be(nonce, seq);
  return nonce;
}

Bytes record_ad(std::uint8_t type, const std::array<std::uint8_t, 4>& dir) {
  Bytes ad;
  ad.push_back(type);
  ad.insert(ad.end(), dir.begin(), dir.end());
  return ad;
}

crypto::Digest256 transcript1(ByteView m1, ByteView nonce_s, ByteView kex_pub_s,
                              ByteView chain_s) {
  Bytes buf = to_bytes(kTranscriptDomain1);
  append(buf, m1);
  append(buf, nonce_s);
  append(buf, kex_pub_s);
  append(buf, chain_s);
  return crypto::hash(buf);
}

crypto::Digest256 transcript2(ByteView m1, ByteView m2) {
  Bytes buf = to_bytes(kTranscriptDomain2);
  append(buf, m1);
  append(buf, m2);
  return crypto::hash(buf);
}

struct DirectionalKeys {
  crypto::AeadKey c2s;
  crypto::AeadKey s2c;
};

DirectionalKeys handshake_keys(ByteView master) {
  DirectionalKeys keys;
  keys.c2s = crypto::AeadKey::from_bytes(
      crypto::hkdf(master, {}, to_bytes("c2s"), crypto::kAeadKeySize));
  keys.s2c = crypto::AeadKey::from_bytes(
      crypto::hkdf(master, {}, to_bytes("s2c"), crypto::kAeadKeySize));
  return keys;
}

DirectionalKeys resume_keys(ByteView master, ByteView nonce_c,
                            ByteView nonce_s) {
  Bytes salt = concat(nonce_c, nonce_s);
  Bytes okm = crypto::hkdf(master, salt, to_bytes(kResumeInfo),
                           2 * crypto::kAeadKeySize);
  DirectionalKeys keys;
  keys.c2s = crypto::AeadKey::from_bytes(
      ByteView(okm).subspan(0, crypto::kAeadKeySize));
  keys.s2c = crypto::AeadKey::from_bytes(
      ByteView(okm).subspan(crypto::kAeadKeySize, crypto::kAeadKeySize));
  return keys;
}

certs::VerifyContext make_verify_context(const LocalParty& party) {
  certs::VerifyContext ctx;
  ctx.local_authlist = party.authlist;
  ctx.authority_key = party.authority_key;
  ctx.corl = party.corl.get();
  ctx.now = party.clock->now();
  ctx.revocation_exempt = party.revocation_exempt;
  return ctx;
}

std::optional<certs::PeerIdentity> payload_peer(const TicketPayload& p) {
  if (p.peer_public_key.empty()) return std::nullopt;
  certs::PeerIdentity peer;
  peer.measurement = p.peer_measurement;
  peer.authlist_hash = p.peer_authlist_hash;
  peer.service = p.peer_service;
  peer.via_verifier = p.peer_via_verifier;
  peer.public_key = p.peer_public_key;
  return peer;
}

}  // namespace

Bytes TicketPayload::encode() const {
  tlv::Writer w;
  w.field(1, master_secret);
  w.field(2, peer_measurement.view());
  w.field(3, peer_authlist_hash.view());
  w.field_str(4, peer_service);
  w.field_u8(5, peer_via_verifier ? 1 : 0);
  w.field(6, peer_public_key);
  w.field_u64(7, issue_time);
  w.field_u64(8, expiry);
  return w.take();
}

TicketPayload TicketPayload::decode(ByteView data) {
  tlv::Reader r(data);
  TicketPayload p;
  ByteView ms = r.field(1);
  p.master_secret.assign(ms.begin(), ms.end());
  p.peer_measurement = crypto::Digest256::from_bytes(r.field(2));
  p.peer_authlist_hash = crypto::Digest256::from_bytes(r.field(3));
  p.peer_service = r.field_str(4);
  p.peer_via_verifier = r.field_u8(5) != 0;
  ByteView pk = r.field(6);
  p.peer_public_key.assign(pk.begin(), pk.end());
  p.issue_time = r.field_u64(7);
  p.expiry = r.field_u64(8);
  r.finish();
  return p;
}

TicketManager::TicketManager(Rng rng, ClockPtr clock, Micros ticket_lifetime,
                             Micros key_rotation)
    : rng_(rng),
      clock_(std::move(clock)),
      ticket_lifetime_(ticket_lifetime),
      key_rotation_(key_rotation) {
  current_key_born_ = clock_->now();
  keys_[current_key_id_] = crypto::AeadKey::from_bytes(rng_.bytes(32));
}

void TicketManager::rotate_if_due() {
  Micros now = clock_->now();
  if (now - current_key_born_ < key_rotation_) return;
  ++current_key_id_;
  current_key_born_ = now;
  keys_[current_key_id_] = crypto::AeadKey::from_bytes(rng_.bytes(32));
  // Keys older than one rotation plus the ticket lifetime can no longer
  // validate an unexpired ticket.
  while (keys_.size() > 2) keys_.erase(keys_.begin());
}

SealedTicket TicketManager::seal(TicketPayload payload) {
  std::lock_guard lock(mu_);
  rotate_if_due();
  payload.issue_time = clock_->now();
  payload.expiry = payload.issue_time + ticket_lifetime_;
  Bytes nonce = rng_.bytes(crypto::kAeadNonceSize);
  Bytes ct = crypto::aead_seal(keys_[current_key_id_], nonce,
                               to_bytes(kTicketAd), payload.encode());
  tlv::Writer w;
  w.field_u64(1, current_key_id_);
  w.field(2, nonce);
  w.field(3, ct);
  return SealedTicket{w.take(), payload.expiry};
}

std::optional<TicketPayload> TicketManager::open(ByteView blob,
                                                 ResumeError::Kind& why) {
  std::lock_guard lock(mu_);
  std::uint64_t key_id;
  ByteView nonce, ct;
  try {
    tlv::Reader r(blob);
    key_id = r.field_u64(1);
    nonce = r.field(2);
    ct = r.field(3);
    r.finish();
  } catch (const tlv::MalformedEncoding&) {
    why = ResumeError::Kind::Protocol;
    return std::nullopt;
  }
  auto key_it = keys_.find(key_id);
  if (key_it == keys_.end()) {
    why = ResumeError::Kind::UnknownTicketKey;
    return std::nullopt;
  }
  auto pt = crypto::aead_open(key_it->second, nonce, to_bytes(kTicketAd), ct);
  if (!pt) {
    why = ResumeError::Kind::UnknownTicketKey;
    return std::nullopt;
  }
  TicketPayload payload;
  try {
    payload = TicketPayload::decode(*pt);
  } catch (const tlv::MalformedEncoding&) {
    why = ResumeError::Kind::Protocol;
    return std::nullopt;
  }
  if (clock_->now() > payload.expiry) {
    why = ResumeError::Kind::ExpiredTicket;
    return std::nullopt;
  }
  return payload;
}

SecureChannel SecureChannel::from_keys(fabric::ConnPtr conn, bool is_dialer,
                                       crypto::AeadKey send_key,
                                       crypto::AeadKey recv_key,
                                       Bytes master_secret,
                                       std::optional<certs::PeerIdentity> peer) {
  SecureChannel ch;
  ch.conn_ = std::move(conn);
  ch.is_dialer_ = is_dialer;
  ch.send_key_ = send_key;
  ch.recv_key_ = recv_key;
  ch.master_secret_ = std::move(master_secret);
  ch.peer_ = std::move(peer);
  return ch;
}

void SecureChannel::send_record(std::uint8_t type, ByteView plaintext) {
  const auto& dir = is_dialer_ ? kDirC2s : kDirS2c;
  Bytes body;
  store_u64be(body, send_seq_);
  Bytes ct = crypto::aead_seal(send_key_, record_nonce(dir, send_seq_),
                               record_ad(type, dir), plaintext);
  append(body, ct);
  ++send_seq_;
  send_frame(conn_, type, body);
}

std::pair<std::uint8_t, Bytes> SecureChannel::recv_record(Micros timeout) {
  auto [type, body] = recv_frame(conn_, timeout);
  if (!record_is_encrypted(type)) {
    return {type, std::move(body)};
  }
  if (body.size() < 8) {
    throw RecordError(RecordError::Kind::Protocol, "short encrypted record");
  }
  std::uint64_t seq = load_u64be(body);
  if (seq != recv_seq_) {
    throw RecordError(RecordError::Kind::ReplayDetected,
                      "sequence " + std::to_string(seq) + ", expected " +
                          std::to_string(recv_seq_));
  }
  const auto& dir = is_dialer_ ? kDirS2c : kDirC2s;
  auto pt = crypto::aead_open(recv_key_, record_nonce(dir, seq),
                              record_ad(type, dir),
                              ByteView(body).subspan(8));
  if (!pt) {
    throw RecordError(RecordError::Kind::AuthFailure,
                      "record failed authentication");
  }
  ++recv_seq_;
  return {type, std::move(*pt)};
}

void SecureChannel::send(ByteView plaintext) { send_record(kRecData, plaintext); }

Bytes SecureChannel::recv(Micros timeout) {
  for (;;) {
    auto [type, payload] = recv_record(timeout);
    if (type == kRecData) {
      return std::move(payload);
    }
    if (type == kRecTicket) {
      tlv::Reader r(payload);
      ResumptionTicket ticket;
      ByteView blob = r.field(1);
      ticket.blob.assign(blob.begin(), blob.end());
      ticket.expiry = r.field_u64(2);
      r.finish();
      ticket.master_secret = master_secret_;
      ticket.peer = peer_;
      pending_ticket_ = std::move(ticket);
      continue;
    }
    throw RecordError(RecordError::Kind::Protocol,
                      "unexpected record type " + std::to_string(type));
  }
}

std::optional<ResumptionTicket> SecureChannel::take_resumption(Micros timeout) {
  if (!pending_ticket_ && timeout > 0) {
    try {
      auto [type, payload] = recv_record(timeout);
      if (type == kRecTicket) {
        tlv::Reader r(payload);
        ResumptionTicket ticket;
        ByteView blob = r.field(1);
        ticket.blob.assign(blob.begin(), blob.end());
        ticket.expiry = r.field_u64(2);
        r.finish();
        ticket.master_secret = master_secret_;
        ticket.peer = peer_;
        pending_ticket_ = std::move(ticket);
      }
    } catch (const fabric::TransportError&) {
    }
  }
  auto out = std::move(pending_ticket_);
  pending_ticket_.reset();
  return out;
}

void SecureChannel::close() {
  if (conn_) conn_->close();
}

Bytes SecureChannel::issue_ticket(TicketManager& tm) {
  TicketPayload payload;
  payload.master_secret = master_secret_;
  if (peer_) {
    payload.peer_measurement = peer_->measurement;
    payload.peer_authlist_hash = peer_->authlist_hash;
    payload.peer_service = peer_->service;
    payload.peer_via_verifier = peer_->via_verifier;
    payload.peer_public_key = peer_->public_key;
  }
  SealedTicket sealed = tm.seal(std::move(payload));
  tlv::Writer w;
  w.field(1, sealed.blob);
  w.field_u64(2, sealed.expiry);
  send_record(kRecTicket, w.bytes());
  return sealed.blob;
}

SecureChannel handshake_connect(fabric::ConnPtr conn, const LocalParty& party,
                                const HandshakeConfig& config) {
  if (config.mode != Mode::ConnectVerifyPeer) {
    throw std::logic_error("handshake_connect requires a connect mode");
  }

  crypto::KexKeyPair kex =
      crypto::KexKeyPair::from_private(party.random_bytes(32));
  Bytes nonce_c = party.random_bytes(32);

  tlv::Writer m1w;
  m1w.field_u8(1, kProtocolVersion);
  m1w.field(2, nonce_c);
  m1w.field(3, kex.public_key);
  Bytes own_chain_bytes;
  if (party.chain) {
    own_chain_bytes = party.chain->encode();
    m1w.field(4, own_chain_bytes);
  }
  Bytes m1 = m1w.take();
  send_frame(conn, kRecHsM1, m1);

  auto [type2, m2] = recv_frame(conn, config.timeout);
  if (type2 == kRecAlert) raise_remote_alert(m2);
  if (type2 != kRecHsM2) {
    throw HandshakeError(HandshakeError::Kind::Protocol,
                         certs::RejectReason::None, "expected M2");
  }

  Bytes nonce_s, kex_pub_s, chain_bytes, sig_s;
  try {
    tlv::Reader r(m2);
    ByteView v = r.field(1);
    nonce_s.assign(v.begin(), v.end());
    v = r.field(2);
    kex_pub_s.assign(v.begin(), v.end());
    v = r.field(3);
    chain_bytes.assign(v.begin(), v.end());
    v = r.field(4);
    sig_s.assign(v.begin(), v.end());
    r.finish();
  } catch (const tlv::MalformedEncoding& e) {
    throw HandshakeError(HandshakeError::Kind::Protocol,
                         certs::RejectReason::None, e.what());
  }

  certs::CertChain peer_chain;
  try {
    peer_chain = certs::CertChain::decode(chain_bytes);
  } catch (const tlv::MalformedEncoding& e) {
    send_alert(conn, kAlertProtocol);
    throw HandshakeError(HandshakeError::Kind::Protocol,
                         certs::RejectReason::None, e.what());
  }

  certs::ChainExpectation expect;
  expect.expected_service = config.expected_peer_service;
  expect.verifier_service = config.expected_verifier_service;
  expect.verifier_of_verifier_service =
      config.expected_verifier_of_verifier_service;
  certs::ChainResult result =
      certs::verify_chain(peer_chain, expect, make_verify_context(party));
  if (!result.ok()) {
    send_alert(conn, static_cast<std::uint8_t>(result.reason));
    throw HandshakeError(HandshakeError::Kind::LocalReject, result.reason,
                         std::string("rejected peer: ") +
                             certs::to_string(result.reason));
  }

  crypto::Digest256 t1 = transcript1(m1, nonce_s, kex_pub_s, chain_bytes);
  if (!crypto::verify(result.peer->public_key, t1.view(), sig_s)) {
    send_alert(conn, kAlertTranscript);
    throw HandshakeError(HandshakeError::Kind::TranscriptAuth,
                         certs::RejectReason::None,
                         "server transcript signature invalid");
  }

  Bytes shared = crypto::kex_shared(kex.private_key, kex_pub_s);
  Bytes salt = concat(nonce_c, nonce_s);
  Bytes master = crypto::hkdf(shared, salt, to_bytes(kMasterInfo), 32);
  DirectionalKeys keys = handshake_keys(master);

  SecureChannel ch;
  ch.conn_ = std::move(conn);
  ch.is_dialer_ = true;
  ch.send_key_ = keys.c2s;
  ch.recv_key_ = keys.s2c;
  ch.master_secret_ = master;
  ch.peer_ = result.peer;

  if (party.chain) {
    crypto::Digest256 t2 = transcript2(m1, m2);
    tlv::Writer m3w;
    m3w.field(1, crypto::sign(party.keypair->private_key, t2.view()));
    send_frame(ch.conn_, kRecHsM3, m3w.bytes());
  }
  return ch;
}

SecureChannel handshake_accept(fabric::ConnPtr conn, const LocalParty& party,
                               const HandshakeConfig& config) {
  if (config.mode != Mode::AcceptVerifyPeer &&
      config.mode != Mode::AcceptOpenService) {
    throw std::logic_error("handshake_accept requires an accept mode");
  }

  auto [type1, m1] = recv_frame(conn, config.timeout);

  if (type1 == kRecResumeReq) {
    if (config.ticket_manager == nullptr) {
      send_alert(conn, kAlertProtocol);
      throw ResumeError(ResumeError::Kind::Protocol, false,
                        "no ticket manager configured");
    }
    return accept_resumption(std::move(conn), party, *config.ticket_manager,
                             m1, config.timeout);
  }

  // --- full handshake path ---
  if (!party.chain || !party.keypair) {
    throw std::logic_error("acceptor requires an identity chain");
  }
  if (type1 != kRecHsM1) {
    send_alert(conn, kAlertProtocol);
    throw HandshakeError(HandshakeError::Kind::Protocol,
                         certs::RejectReason::None, "expected M1");
  }

  Bytes nonce_c, kex_pub_c, client_chain_bytes;
  try {
    tlv::Reader r(m1);
    std::uint8_t version = r.field_u8(1);
    if (version != kProtocolVersion) {
      throw tlv::MalformedEncoding("unsupported protocol version");
    }
    ByteView v = r.field(2);
    nonce_c.assign(v.begin(), v.end());
    v = r.field(3);
    kex_pub_c.assign(v.begin(), v.end());
    if (auto c = r.maybe_field(4)) {
      client_chain_bytes.assign(c->begin(), c->end());
    }
    r.finish();
  } catch (const tlv::MalformedEncoding& e) {
    send_alert(conn, kAlertProtocol);
    throw HandshakeError(HandshakeError::Kind::Protocol,
                         certs::RejectReason::None, e.what());
  }

  std::optional<certs::PeerIdentity> peer;
  if (config.mode == Mode::AcceptVerifyPeer) {
    if (client_chain_bytes.empty()) {
      send_alert(conn, kAlertProtocol);
      throw HandshakeError(HandshakeError::Kind::Protocol,
                           certs::RejectReason::None,
                           "peer offered no certificate chain");
    }
  }
  if (!client_chain_bytes.empty()) {
    certs::CertChain client_chain;
    try {
      client_chain = certs::CertChain::decode(client_chain_bytes);
    } catch (const tlv::MalformedEncoding& e) {
      send_alert(conn, kAlertProtocol);
      throw HandshakeError(HandshakeError::Kind::Protocol,
                           certs::RejectReason::None, e.what());
    }
    certs::ChainResult result;
    if (config.mode == Mode::AcceptVerifyPeer) {
      certs::ChainExpectation expect;
      expect.expected_service = config.expected_peer_service;
      expect.verifier_service = config.expected_verifier_service;
      expect.verifier_of_verifier_service =
          config.expected_verifier_of_verifier_service;
      result =
          certs::verify_chain(client_chain, expect, make_verify_context(party));
    } else {
      // Open service: the requester's identity does not gate acceptance,
      // but an offered chain must still be internally valid.
      result = certs::verify_chain_signatures_only(client_chain,
                                                   make_verify_context(party));
    }
    if (!result.ok()) {
      send_alert(conn, static_cast<std::uint8_t>(result.reason));
      throw HandshakeError(HandshakeError::Kind::LocalReject, result.reason,
                           std::string("rejected peer: ") +
                               certs::to_string(result.reason));
    }
    peer = result.peer;
  }

  Bytes nonce_s = party.random_bytes(32);
  crypto::KexKeyPair kex =
      crypto::KexKeyPair::from_private(party.random_bytes(32));
  Bytes own_chain_bytes = party.chain->encode();

  crypto::Digest256 t1 = transcript1(m1, nonce_s, kex.public_key,
                                     own_chain_bytes);
  tlv::Writer m2w;
  m2w.field(1, nonce_s);
  m2w.field(2, kex.public_key);
  m2w.field(3, own_chain_bytes);
  m2w.field(4, crypto::sign(party.keypair->private_key, t1.view()));
  Bytes m2 = m2w.take();
  send_frame(conn, kRecHsM2, m2);

  Bytes shared = crypto::kex_shared(kex.private_key, kex_pub_c);
  Bytes salt = concat(nonce_c, nonce_s);
  Bytes master = crypto::hkdf(shared, salt, to_bytes(kMasterInfo), 32);
  DirectionalKeys keys = handshake_keys(master);

  if (!client_chain_bytes.empty()) {
    auto [type3, m3] = recv_frame(conn, config.timeout);
    if (type3 == kRecAlert) raise_remote_alert(m3);
    if (type3 != kRecHsM3) {
      send_alert(conn, kAlertProtocol);
      throw HandshakeError(HandshakeError::Kind::Protocol,
                           certs::RejectReason::None, "expected M3");
    }
    Bytes sig_c;
    try {
      tlv::Reader r(m3);
      ByteView v = r.field(1);
      sig_c.assign(v.begin(), v.end());
      r.finish();
    } catch (const tlv::MalformedEncoding& e) {
      send_alert(conn, kAlertProtocol);
      throw HandshakeError(HandshakeError::Kind::Protocol,
                           certs::RejectReason::None, e.what());
    }
    crypto::Digest256 t2 = transcript2(m1, m2);
    if (!peer || !crypto::verify(peer->public_key, t2.view(), sig_c)) {
      send_alert(conn, kAlertTranscript);
      throw HandshakeError(HandshakeError::Kind::TranscriptAuth,
                           certs::RejectReason::None,
                           "client transcript signature invalid");
    }
  }

  SecureChannel ch;
  ch.conn_ = std::move(conn);
  ch.is_dialer_ = false;
  ch.send_key_ = keys.s2c;
  ch.recv_key_ = keys.c2s;
  ch.master_secret_ = master;
  ch.peer_ = peer;

  if (party.counters) {
    party.counters->full_handshakes.fetch_add(1, std::memory_order_relaxed);
  }
  if (config.ticket_manager != nullptr) {
    ch.issue_ticket(*config.ticket_manager);
  }
  return ch;
}

SecureChannel accept_resumption(fabric::ConnPtr conn, const LocalParty& party,
                                TicketManager& tm, ByteView resume_req_body,
                                Micros timeout) {
  Bytes blob, nonce_c;
  try {
    tlv::Reader r(resume_req_body);
    ByteView v = r.field(1);
    blob.assign(v.begin(), v.end());
    v = r.field(2);
    nonce_c.assign(v.begin(), v.end());
    r.finish();
  } catch (const tlv::MalformedEncoding& e) {
    send_alert(conn, kAlertProtocol);
    throw ResumeError(ResumeError::Kind::Protocol, false, e.what());
  }
  ResumeError::Kind why = ResumeError::Kind::Protocol;
  auto payload = tm.open(blob, why);
  if (!payload) {
    std::uint8_t code = why == ResumeError::Kind::ExpiredTicket
                            ? kAlertExpiredTicket
                            : why == ResumeError::Kind::UnknownTicketKey
                                  ? kAlertUnknownTicketKey
                                  : kAlertProtocol;
    send_alert(conn, code);
    throw ResumeError(why, false, "ticket rejected");
  }
  // Resumption skips certificate verification but never revocation.
  bool exempt = std::find(party.revocation_exempt.begin(),
                          party.revocation_exempt.end(),
                          payload->peer_service) !=
                party.revocation_exempt.end();
  if (!exempt && party.corl &&
      party.corl->is_revoked(payload->peer_measurement)) {
    send_alert(conn, kAlertRevokedTicket);
    throw ResumeError(ResumeError::Kind::Revoked, false,
                      "resuming peer is revoked");
  }

  Bytes nonce_s = party.random_bytes(32);
  tlv::Writer ackw;
  ackw.field(1, nonce_s);
  send_frame(conn, kRecResumeAck, ackw.bytes());

  DirectionalKeys keys = resume_keys(payload->master_secret, nonce_c, nonce_s);
  SecureChannel ch;
  ch.conn_ = std::move(conn);
  ch.is_dialer_ = false;
  ch.send_key_ = keys.s2c;
  ch.recv_key_ = keys.c2s;
  ch.master_secret_ = payload->master_secret;
  ch.peer_ = payload_peer(*payload);

  // Proof of possession before the channel is considered live.
  auto [ctype, cbody] = ch.recv_record(timeout);
  if (ctype != kRecResumeConfirm) {
    throw ResumeError(ResumeError::Kind::Protocol, false,
                      "missing resume confirmation");
  }
  (void)cbody;
  if (party.counters) {
    party.counters->resumptions.fetch_add(1, std::memory_order_relaxed);
  }
  ch.issue_ticket(tm);
  return ch;
}

SecureChannel resume_connect(fabric::ConnPtr conn, const LocalParty& party,
                             const ResumptionTicket& ticket, Micros timeout) {
  if (party.clock->now() > ticket.expiry) {
    throw ResumeError(ResumeError::Kind::ExpiredTicket, false,
                      "ticket expired");
  }
  if (ticket.peer && party.corl) {
    bool exempt = std::find(party.revocation_exempt.begin(),
                            party.revocation_exempt.end(),
                            ticket.peer->service) !=
                  party.revocation_exempt.end();
    if (!exempt && party.corl->is_revoked(ticket.peer->measurement)) {
      throw ResumeError(ResumeError::Kind::Revoked, false,
                        "remembered peer is revoked");
    }
  }

  Bytes nonce_c = party.random_bytes(32);
  tlv::Writer reqw;
  reqw.field(1, ticket.blob);
  reqw.field(2, nonce_c);
  send_frame(conn, kRecResumeReq, reqw.bytes());

  auto [type, body] = recv_frame(conn, timeout);
  if (type == kRecAlert) raise_remote_alert(body);
  if (type != kRecResumeAck) {
    throw ResumeError(ResumeError::Kind::Protocol, false, "expected ack");
  }
  Bytes nonce_s;
  try {
    tlv::Reader r(body);
    ByteView v = r.field(1);
    nonce_s.assign(v.begin(), v.end());
    r.finish();
  } catch (const tlv::MalformedEncoding& e) {
    throw ResumeError(ResumeError::Kind::Protocol, false, e.what());
  }

  DirectionalKeys keys = resume_keys(ticket.master_secret, nonce_c, nonce_s);
  SecureChannel ch;
  ch.conn_ = std::move(conn);
  ch.is_dialer_ = true;
  ch.send_key_ = keys.c2s;
  ch.recv_key_ = keys.s2c;
  ch.master_secret_ = ticket.master_secret;
  ch.peer_ = ticket.peer;
  ch.send_record(kRecResumeConfirm, {});
  return ch;
}

}  // namespace decent::channel
