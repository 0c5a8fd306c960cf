// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/component.hpp"

#include "decent/wire.hpp"

namespace decent::component {

namespace {

constexpr std::string_view kLaC2sInfo = "decent-la-c2s";
constexpr std::string_view kLaS2cInfo = "decent-la-s2c";
constexpr std::string_view kSealLabel = "decent-seal";
const std::array<std::uint8_t, 4> kLaDirC2s = {'l', 'a', 'c', 0};
const std::array<std::uint8_t, 4> kLaDirS2c = {'l', 'a', 's', 0};

Bytes la_nonce(const std::array<std::uint8_t, 4>& dir) {
  Bytes nonce(dir.begin(), dir.end());
  store_u64be(nonce, 0);
  return nonce;
}

Bytes la_ad(std::uint8_t type, const std::array<std::uint8_t, 4>& dir) {
  Bytes ad;
  ad.push_back(type);
  ad.insert(ad.end(), dir.begin(), dir.end());
  return ad;
}

}  // namespace

Bytes SealedBlob::encode() const {
  tlv::Writer w;
  w.field(1, label);
  w.field(2, nonce);
  w.field(3, ciphertext);
  return w.take();
}

SealedBlob SealedBlob::decode(ByteView data) {
  tlv::Reader r(data);
  SealedBlob blob;
  ByteView v = r.field(1);
  blob.label.assign(v.begin(), v.end());
  v = r.field(2);
  blob.nonce.assign(v.begin(), v.end());
  v = r.field(3);
  blob.ciphertext.assign(v.begin(), v.end());
  r.finish();
  return blob;
}

AcquiredChain acquire_chain(const platform::EnclaveHandle& enclave,
                            const crypto::SigningKeyPair& keypair,
                            const authlist::AuthList& list,
                            const fabric::ConnPtr& conn, Rng& rng,
                            Micros timeout) {
  crypto::KexKeyPair kex = crypto::KexKeyPair::from_private(rng.bytes(32));

  crypto::Digest256 kex_fp = crypto::hash(kex.public_key);
  Bytes report_data(kex_fp.view().begin(), kex_fp.view().end());
  append(report_data, keypair.fingerprint.view());
  platform::LocalReport own_report = enclave.create_local_report(report_data);

  {
    tlv::Writer w;
    w.field(1, kex.public_key);
    w.field(2, own_report.encode());
    wire::send_frame(conn, wire::kLaHello, w.bytes());
  }

  auto [type, body] = wire::recv_frame(conn, timeout);
  if (type == wire::kLaError) {
    std::string what = "issuer refused";
    try {
      tlv::Reader r(body);
      what = r.field_str(1);
    } catch (const tlv::MalformedEncoding&) {
    }
    throw server::LaVerifyFailed(what);
  }
  if (type != wire::kLaHelloReply) {
    throw server::LaVerifyFailed("unexpected frame from issuer");
  }
  Bytes kex_pub_s;
  platform::LocalReport server_report;
  {
    tlv::Reader r(body);
    ByteView v = r.field(1);
    kex_pub_s.assign(v.begin(), v.end());
    server_report = platform::LocalReport::decode(r.field(2));
    r.finish();
  }
  if (!enclave.verify_local_report(server_report)) {
    throw server::LaVerifyFailed(
        "issuer local report not verifiable on this platform");
  }
  crypto::Digest256 server_kex_fp = crypto::hash(kex_pub_s);
  if (!std::equal(server_kex_fp.bytes.begin(), server_kex_fp.bytes.end(),
                  server_report.report_data.begin())) {
    throw server::LaVerifyFailed("issuer report does not bind its session key");
  }

  Bytes shared = crypto::kex_shared(kex.private_key, kex_pub_s);
  auto key_c2s = crypto::AeadKey::from_bytes(
      crypto::hkdf(shared, {}, to_bytes(kLaC2sInfo), 32));
  auto key_s2c = crypto::AeadKey::from_bytes(
      crypto::hkdf(shared, {}, to_bytes(kLaS2cInfo), 32));

  {
    tlv::Writer w;
    w.field(1, keypair.public_key);
    w.field(2, list.encoded());
    Bytes ct = crypto::aead_seal(key_c2s, la_nonce(kLaDirC2s),
                                 la_ad(wire::kLaIssueReq, kLaDirC2s),
                                 w.bytes());
    wire::send_frame(conn, wire::kLaIssueReq, ct);
  }

  auto [resp_type, resp_body] = wire::recv_frame(conn, timeout);
  if (resp_type == wire::kLaError) {
    throw server::LaVerifyFailed("issuer refused the request");
  }
  if (resp_type != wire::kLaIssueResp) {
    throw server::LaVerifyFailed("unexpected frame from issuer");
  }
  auto pt = crypto::aead_open(key_s2c, la_nonce(kLaDirS2c),
                              la_ad(wire::kLaIssueResp, kLaDirS2c), resp_body);
  if (!pt) {
    throw server::LaVerifyFailed("issuer response failed authentication");
  }

  AcquiredChain out;
  {
    tlv::Reader r(*pt);
    out.chain.component = certs::ComponentCertificate::decode(r.field(1));
    out.chain.sa = certs::SaCertificate::decode(r.field(2));
    r.finish();
  }
  if (out.chain.component.component_public_key != keypair.public_key ||
      out.chain.component.component_measurement != enclave.measurement() ||
      out.chain.component.authlist_bytes != list.encoded()) {
    throw server::LaVerifyFailed("issued certificate does not match us");
  }
  return out;
}

ComponentContext::ComponentContext(platform::EnclaveHandle enclave,
                                   authlist::AuthList list,
                                   fabric::Fabric& fabric,
                                   std::string node_name, Bytes authority_key,
                                   Rng rng, Options options)
    : enclave_(std::move(enclave)),
      authlist_(std::move(list)),
      fabric_(fabric),
      node_name_(std::move(node_name)),
      authority_key_(std::move(authority_key)),
      options_(std::move(options)),
      rng_(rng) {
  keypair_ = crypto::SigningKeyPair::generate(rng_);
  if (options_.ticket_manager == nullptr) {
    tickets_ = std::make_unique<channel::TicketManager>(
        rng_.fork("tickets"), fabric_.clock());
  }
}

std::shared_ptr<ComponentContext> ComponentContext::init(
    platform::EnclaveHandle enclave, authlist::AuthList list,
    fabric::Fabric& fabric, std::string node_name,
    const fabric::Address& server_la_addr, Bytes authority_key, Rng rng,
    Options options) {
  auto ctx = std::shared_ptr<ComponentContext>(new ComponentContext(
      std::move(enclave), std::move(list), fabric, std::move(node_name),
      std::move(authority_key), rng, std::move(options)));
  auto conn = fabric.dial({ctx->node_name_, "la"}, server_la_addr,
                          ctx->options_.handshake_timeout);
  AcquiredChain acquired = acquire_chain(ctx->enclave_, ctx->keypair_,
                                         ctx->authlist_, conn, ctx->rng_,
                                         ctx->options_.handshake_timeout);
  conn->close();
  ctx->chain_ = std::make_shared<const certs::CertChain>(
      std::move(acquired.chain));
  return ctx;
}

std::shared_ptr<ComponentContext> ComponentContext::create_local(
    platform::EnclaveHandle enclave, authlist::AuthList list,
    fabric::Fabric& fabric, std::string node_name, Bytes authority_key,
    Rng rng, Options options) {
  return std::shared_ptr<ComponentContext>(new ComponentContext(
      std::move(enclave), std::move(list), fabric, std::move(node_name),
      std::move(authority_key), rng, std::move(options)));
}

void ComponentContext::require_running() const {
  std::lock_guard lock(mu_);
  if (state_ != State::Running) throw ComponentShutDown();
}

Bytes ComponentContext::random_bytes(std::size_t n) {
  std::lock_guard lock(mu_);
  return rng_.bytes(n);
}

std::vector<std::string> ComponentContext::revocation_exempt() const {
  std::vector<std::string> exempt{options_.revokers.revoker_service};
  for (const auto& name : options_.revokers.verifier_of_revoker_services) {
    exempt.push_back(name);
  }
  return exempt;
}

channel::LocalParty ComponentContext::party() const {
  channel::LocalParty p;
  {
    std::lock_guard lock(mu_);
    p.chain = chain_;
    p.corl = corl_;
  }
  p.keypair = &keypair_;
  p.authlist = &authlist_;
  p.authority_key = authority_key_;
  p.revocation_exempt = revocation_exempt();
  p.clock = fabric_.clock();
  p.random_bytes = [self = const_cast<ComponentContext*>(this)](
                       std::size_t n) { return self->random_bytes(n); };
  p.counters = &fabric_.counters();
  return p;
}

channel::HandshakeConfig ComponentContext::accept_config(
    channel::Mode mode, std::string expected_service,
    std::optional<std::string> expected_verifier_service) const {
  channel::HandshakeConfig config;
  config.mode = mode;
  config.expected_peer_service = std::move(expected_service);
  config.expected_verifier_service = std::move(expected_verifier_service);
  config.ticket_manager = options_.ticket_manager != nullptr
                              ? options_.ticket_manager
                              : tickets_.get();
  config.timeout = options_.handshake_timeout;
  return config;
}

void ComponentContext::register_channel(
    const std::shared_ptr<channel::SecureChannel>& ch) {
  std::lock_guard lock(mu_);
  channels_.erase(
      std::remove_if(channels_.begin(), channels_.end(),
                     [](const auto& weak) { return weak.expired(); }),
      channels_.end());
  channels_.push_back(ch);
}

std::shared_ptr<channel::SecureChannel> ComponentContext::connect(
    const fabric::Address& addr, const std::string& expected_service,
    std::optional<std::string> expected_verifier_service,
    std::optional<std::string> expected_verifier_of_verifier) {
  require_running();
  channel::HandshakeConfig config;
  config.mode = channel::Mode::ConnectVerifyPeer;
  config.expected_peer_service = expected_service;
  config.expected_verifier_service = std::move(expected_verifier_service);
  config.expected_verifier_of_verifier_service =
      std::move(expected_verifier_of_verifier);
  config.timeout = options_.handshake_timeout;
  auto conn = fabric_.dial({node_name_, "out"}, addr, config.timeout);
  auto ch = std::make_shared<channel::SecureChannel>(
      channel::handshake_connect(conn, party(), config));
  register_channel(ch);
  return ch;
}

std::shared_ptr<channel::SecureChannel> ComponentContext::accept(
    fabric::ConnPtr conn, const channel::HandshakeConfig& config) {
  require_running();
  auto ch = std::make_shared<channel::SecureChannel>(
      channel::handshake_accept(std::move(conn), party(), config));
  register_channel(ch);
  return ch;
}

std::shared_ptr<channel::SecureChannel> ComponentContext::resume(
    const fabric::Address& addr, const channel::ResumptionTicket& ticket) {
  require_running();
  auto conn = fabric_.dial({node_name_, "out"}, addr,
                           options_.handshake_timeout);
  auto ch = std::make_shared<channel::SecureChannel>(channel::resume_connect(
      conn, party(), ticket, options_.handshake_timeout));
  register_channel(ch);
  return ch;
}

crypto::AeadKey ComponentContext::seal_key(ByteView label) const {
  crypto::AeadKey base = enclave_.derive_seal_key(
      platform::SealPolicy::ByMeasurement, to_bytes(kSealLabel));
  Bytes key = crypto::hkdf(base.view(), authlist_.hash().view(), label,
                           crypto::kAeadKeySize);
  return crypto::AeadKey::from_bytes(key);
}

Bytes ComponentContext::seal_ad(ByteView label) const {
  Bytes ad(enclave_.measurement().view().begin(),
           enclave_.measurement().view().end());
  append(ad, authlist_.hash().view());
  append(ad, label);
  return ad;
}

SealedBlob ComponentContext::seal(ByteView label, ByteView plaintext) {
  require_running();
  SealedBlob blob;
  blob.label.assign(label.begin(), label.end());
  blob.nonce = random_bytes(crypto::kAeadNonceSize);
  blob.ciphertext = crypto::aead_seal(seal_key(label), blob.nonce,
                                      seal_ad(label), plaintext);
  return blob;
}

std::optional<Bytes> ComponentContext::unseal(const SealedBlob& blob) {
  require_running();
  return crypto::aead_open(seal_key(blob.label), blob.nonce,
                           seal_ad(blob.label), blob.ciphertext);
}

bool ComponentContext::ingest_corl(
    const crypto::Digest256& revoker_measurement, ByteView peer_public_key,
    std::uint64_t seq, const std::vector<crypto::Digest256>& entries,
    ByteView signature) {
  certs::Corl corl;
  corl.revoker_identity = revoker_measurement;
  corl.seq = seq;
  corl.entries = entries;
  if (!crypto::verify(peer_public_key, corl.signed_payload(), signature)) {
    return false;
  }
  std::lock_guard lock(mu_);
  std::string key = revoker_measurement.hex();
  auto it = revoker_seq_.find(key);
  if (it != revoker_seq_.end() && seq < it->second) {
    return false;  // rollback attempt; entries already seen stay in force
  }
  revoker_seq_[key] = seq;
  // Rebuild the union view. Entries are append-only per revoker, so adding
  // the latest list is sufficient.
  auto next = std::make_shared<certs::CorlView>(*corl_);
  for (const auto& e : entries) next->revoked.insert(e);
  corl_ = std::move(next);
  return true;
}

bool ComponentContext::poll_revocations_once() {
  require_running();
  const RevokerConfig& cfg = options_.revokers;
  bool all_ok = true;
  for (const auto& endpoint : cfg.endpoints) {
    bool ok = false;
    try {
      auto conn = fabric_.dial({node_name_, "poll"}, endpoint,
                               cfg.poll_timeout);
      channel::HandshakeConfig config;
      config.mode = channel::Mode::ConnectVerifyPeer;
      config.expected_peer_service = cfg.revoker_service;
      if (!cfg.verifier_of_revoker_services.empty()) {
        config.expected_verifier_service =
            cfg.verifier_of_revoker_services.front();
      }
      config.timeout = cfg.poll_timeout;
      auto ch = channel::handshake_connect(conn, party(), config);

      std::uint64_t since = 0;
      {
        std::lock_guard lock(mu_);
        auto it = revoker_seq_.find(ch.peer()->measurement.hex());
        if (it != revoker_seq_.end()) since = it->second;
      }
      tlv::Writer w;
      w.field_u64(1, since);
      ch.send(wire::encode_msg(wire::kMsgCorlReq, w.bytes()));
      Bytes payload = ch.recv(cfg.poll_timeout);
      auto [kind, body] = wire::split_msg(payload);
      if (kind == wire::kMsgCorlResp) {
        tlv::Reader r(body);
        certs::Corl corl = certs::Corl::decode(r.field(1));
        r.finish();
        ok = corl.revoker_identity == ch.peer()->measurement &&
             ingest_corl(corl.revoker_identity, ch.peer()->public_key,
                         corl.seq, corl.entries, corl.signature);
      }
      ch.close();
    } catch (const fabric::TransportError&) {
    } catch (const channel::HandshakeError&) {
    } catch (const channel::RecordError&) {
    } catch (const tlv::MalformedEncoding&) {
    }

    bool over_limit = false;
    {
      std::lock_guard lock(mu_);
      int& misses = revoker_misses_[endpoint.str()];
      if (ok) {
        misses = 0;
      } else {
        all_ok = false;
        over_limit = ++misses >= cfg.max_missed;
      }
    }
    if (over_limit) {
      shutdown();
      return false;
    }
  }
  return all_ok;
}

void ComponentContext::start_revocation_polling() {
  require_running();
  fabric_.spawn(node_name_ + "/poller", [self = shared_from_this()] {
    for (;;) {
      self->fabric_.sleep_for(self->options_.revokers.poll_interval);
      if (self->state() != State::Running) return;
      try {
        self->poll_revocations_once();
      } catch (const ComponentShutDown&) {
        return;
      }
      if (self->state() != State::Running) return;
    }
  });
}

std::shared_ptr<const certs::CorlView> ComponentContext::corl_view() const {
  std::lock_guard lock(mu_);
  return corl_;
}

State ComponentContext::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

void ComponentContext::shutdown() {
  std::vector<std::weak_ptr<channel::SecureChannel>> channels;
  {
    std::lock_guard lock(mu_);
    if (state_ == State::ShutDown) return;
    state_ = State::ShutDown;
    channels.swap(channels_);
  }
  for (auto& weak : channels) {
    if (auto ch = weak.lock()) ch->close();
  }
  if (options_.on_shutdown) options_.on_shutdown();
}

void ComponentContext::install_verified(
    certs::VerifiedAppCertificate cert,
    std::shared_ptr<const certs::CertChain> verifier_chain) {
  std::lock_guard lock(mu_);
  if (!chain_) throw std::logic_error("no base chain to extend");
  auto next = std::make_shared<certs::CertChain>(*chain_);
  next->verified = std::move(cert);
  next->verifier_chain = std::move(verifier_chain);
  chain_ = std::move(next);
}

std::shared_ptr<const certs::CertChain> ComponentContext::chain() const {
  std::lock_guard lock(mu_);
  return chain_;
}

}  // namespace decent::component
