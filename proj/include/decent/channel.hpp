// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>

#include "decent/certs.hpp"
#include "decent/fabric.hpp"

// Mutually authenticated channel between components.
//
// Handshake (three records; [] marks fields absent for anonymous clients):
//   M1  dialer   -> acceptor  { version, nonce_c, kex_pub_c, [chain_c] }
//   M2  acceptor -> dialer    { nonce_s, kex_pub_s, chain_s,
//                               sig_s = Sign(hash(M1 | M2-without-sig)) }
//   M3  dialer   -> acceptor  { sig_c = Sign(hash(M1 | M2)) }   [with chain_c]
//
// Each side checks the peer chain with certs::verify_chain according to its
// config; transcript signatures cover both nonces, both key-exchange publics
// and the presented chains, which pins the channel to the authenticated
// identities. Keys: master = HKDF(kex_shared, nonce_c|nonce_s, "decent-hs-v1"),
// directional keys = HKDF(master, "", "c2s"/"s2c").
//
// Records: frame = u8 type | u32 len | body; encrypted record bodies are
// u64 seq | AEAD ciphertext with nonce = 4-byte direction tag | 8-byte seq.
// Receivers reject any sequence other than the next expected one.
//
// Resumption: the acceptor can hand the dialer an opaque ticket (sealed under
// a rotating ticket key). Presenting it skips certificate verification but
// both sides re-check the revocation list against the identities stored in
// their session state.
namespace decent::channel {

inline constexpr Micros kDefaultHandshakeTimeout = 5 * kSecond;
inline constexpr Micros kTicketLifetime = 600 * kSecond;
inline constexpr Micros kTicketKeyRotation = 3600 * kSecond;

enum class Mode { ConnectVerifyPeer, AcceptVerifyPeer, AcceptOpenService };

class HandshakeError : public std::runtime_error {
 public:
  enum class Kind {
    LocalReject,     // we rejected the peer chain: `reason` says why
    RemoteReject,    // peer's alert told us it rejected ours
    TranscriptAuth,  // transcript signature failed
    Protocol,        // malformed or unexpected message
  };

  HandshakeError(Kind kind, certs::RejectReason reason,
                 const std::string& what)
      : std::runtime_error("handshake: " + what), kind(kind), reason(reason) {}

  Kind kind;
  certs::RejectReason reason = certs::RejectReason::None;
};

class RecordError : public std::runtime_error {
 public:
  enum class Kind { AuthFailure, ReplayDetected, Protocol };

  RecordError(Kind kind, const std::string& what)
      : std::runtime_error("record: " + what), kind(kind) {}

  Kind kind;
};

class ResumeError : public std::runtime_error {
 public:
  enum class Kind { ExpiredTicket, UnknownTicketKey, Revoked, Protocol };

  ResumeError(Kind kind, bool remote, const std::string& what)
      : std::runtime_error("resume: " + what), kind(kind), remote(remote) {}

  Kind kind;
  bool remote;  // reported by the peer via alert
};

// Session state sealed into a ticket by its issuer.
struct TicketPayload {
  Bytes master_secret;
  crypto::Digest256 peer_measurement;
  crypto::Digest256 peer_authlist_hash;
  std::string peer_service;
  bool peer_via_verifier = false;
  Bytes peer_public_key;
  Micros issue_time = 0;
  Micros expiry = 0;

  Bytes encode() const;
  static TicketPayload decode(ByteView data);
};

struct SealedTicket {
  Bytes blob;
  Micros expiry = 0;
};

// Issues and opens session tickets under rotating keys. One per component.
class TicketManager {
 public:
  TicketManager(Rng rng, ClockPtr clock,
                Micros ticket_lifetime = kTicketLifetime,
                Micros key_rotation = kTicketKeyRotation);

  SealedTicket seal(TicketPayload payload);  // sets issue/expiry from the clock
  // nullopt with `why` set on unknown key, bad seal, or expiry.
  std::optional<TicketPayload> open(ByteView blob, ResumeError::Kind& why);

  Micros ticket_lifetime() const { return ticket_lifetime_; }

 private:
  void rotate_if_due();

  std::mutex mu_;
  Rng rng_;
  ClockPtr clock_;
  Micros ticket_lifetime_;
  Micros key_rotation_;
  std::uint64_t current_key_id_ = 0;
  Micros current_key_born_ = 0;
  std::map<std::uint64_t, crypto::AeadKey> keys_;
};

// What a dialer keeps to come back later: the opaque ticket plus its own
// copy of the session state.
struct ResumptionTicket {
  Bytes blob;
  Bytes master_secret;
  std::optional<certs::PeerIdentity> peer;
  Micros expiry = 0;
};

// Everything an endpoint brings to a handshake. Component contexts own the
// storage; this struct only borrows.
struct LocalParty {
  const crypto::SigningKeyPair* keypair = nullptr;  // null => anonymous
  std::shared_ptr<const certs::CertChain> chain;    // null => anonymous
  const authlist::AuthList* authlist = nullptr;
  Bytes authority_key;
  std::shared_ptr<const certs::CorlView> corl;  // null => empty view
  std::vector<std::string> revocation_exempt{
      std::string(authlist::kRevokerService)};
  ClockPtr clock;
  // Thread-safe source of random bytes (nonces, ephemeral keys).
  std::function<Bytes(std::size_t)> random_bytes;
  fabric::Counters* counters = nullptr;
};

struct HandshakeConfig {
  Mode mode = Mode::ConnectVerifyPeer;
  std::string expected_peer_service;
  std::optional<std::string> expected_verifier_service;
  std::optional<std::string> expected_verifier_of_verifier_service;
  TicketManager* ticket_manager = nullptr;  // acceptor: issue tickets
  Micros timeout = kDefaultHandshakeTimeout;
};

class SecureChannel {
 public:
  // Assembles a channel from externally agreed keys. Used by transports
  // that authenticate by other means (attestation-derived sessions, plain
  // unauthenticated channels) but reuse this record layer.
  static SecureChannel from_keys(fabric::ConnPtr conn, bool is_dialer,
                                 crypto::AeadKey send_key,
                                 crypto::AeadKey recv_key, Bytes master_secret,
                                 std::optional<certs::PeerIdentity> peer = {});

  void send(ByteView plaintext);
  Bytes recv(Micros timeout = fabric::kNoTimeout);

  const std::optional<certs::PeerIdentity>& peer() const { return peer_; }
  const Bytes& master_secret() const { return master_secret_; }

  // Ticket stored by the last TICKET record (pumping frames up to `timeout`
  // if none arrived yet); nullopt when the acceptor issued none.
  std::optional<ResumptionTicket> take_resumption(Micros timeout = 0);

  // Acceptor side: seals current session state and sends it to the peer as
  // a TICKET record. Returns the opaque blob.
  Bytes issue_ticket(TicketManager& tm);

  void close();

 private:
  friend SecureChannel handshake_connect(fabric::ConnPtr, const LocalParty&,
                                         const HandshakeConfig&);
  friend SecureChannel handshake_accept(fabric::ConnPtr, const LocalParty&,
                                        const HandshakeConfig&);
  friend SecureChannel resume_connect(fabric::ConnPtr, const LocalParty&,
                                      const ResumptionTicket&, Micros);
  friend SecureChannel accept_resumption(fabric::ConnPtr, const LocalParty&,
                                         TicketManager&, ByteView, Micros);
  SecureChannel() = default;

  void send_record(std::uint8_t type, ByteView plaintext);
  std::pair<std::uint8_t, Bytes> recv_record(Micros timeout);

  fabric::ConnPtr conn_;
  bool is_dialer_ = false;
  crypto::AeadKey send_key_;
  crypto::AeadKey recv_key_;
  std::uint64_t send_seq_ = 0;
  std::uint64_t recv_seq_ = 0;
  Bytes master_secret_;
  std::optional<certs::PeerIdentity> peer_;
  std::optional<ResumptionTicket> pending_ticket_;
};

// Client side of a fresh handshake. Throws HandshakeError or
// fabric::TransportError.
SecureChannel handshake_connect(fabric::ConnPtr conn, const LocalParty& party,
                                const HandshakeConfig& config);

// Acceptor side; also serves resumption requests arriving on the conn.
SecureChannel handshake_accept(fabric::ConnPtr conn, const LocalParty& party,
                               const HandshakeConfig& config);

// Client side of ticket resumption. Re-checks the local revocation view
// against the remembered peer before dialing in. Throws ResumeError.
SecureChannel resume_connect(fabric::ConnPtr conn, const LocalParty& party,
                             const ResumptionTicket& ticket,
                             Micros timeout = kDefaultHandshakeTimeout);

// Acceptor side of resumption when the RESUME_REQ body has already been read
// off the conn (transports that multiplex their own hello frames). Applies
// the same revocation re-check and issues a fresh ticket.
SecureChannel accept_resumption(fabric::ConnPtr conn, const LocalParty& party,
                                TicketManager& tm, ByteView resume_req_body,
                                Micros timeout = kDefaultHandshakeTimeout);

}  // namespace decent::channel
