// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/sim.hpp"

#include <algorithm>
#include <sstream>

#include "decent/wire.hpp"

namespace decent::sim {

namespace {

constexpr Micros kEchoIdleTimeout = 60 * kSecond;
constexpr Micros kScriptTimeout = 5 * kSecond;

Bytes synthetic_blob(fabric::VirtualFabric& fabric, const std::string& name) {
  Rng rng = fabric.fork_rng("blob:" + name);
  return rng.bytes(96);
}

Bytes issuer_blob() {
  return to_bytes(std::string_view("decent-issuer-enclave-v1"));
}

std::string issuer_node(const std::string& platform_name) {
  return "issuer@" + platform_name;
}

}  // namespace

// --- event log ---------------------------------------------------------------

void EventLog::append(Micros time, std::string kind, std::string actor,
                      std::string detail) {
  std::lock_guard lock(mu_);
  entries_.push_back(
      EventLogEntry{time, std::move(kind), std::move(actor), std::move(detail)});
}

std::vector<EventLogEntry> EventLog::snapshot() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::string EventLog::serialize() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  for (const auto& e : entries_) {
    out << e.time << ' ' << e.kind << ' ' << e.actor << ' ' << e.detail
        << '\n';
  }
  return out.str();
}

bool EventLog::authenticity_holds() const {
  std::lock_guard lock(mu_);
  bool any_accepted = false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.kind != "Accepted") continue;
    any_accepted = true;
    bool matched = false;
    for (std::size_t j = 0; j < i; ++j) {
      const auto& s = entries_[j];
      if (s.kind == "Sent" && s.detail == e.detail) {
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return any_accepted;
}

// --- adversary knowledge -------------------------------------------------------

void KnowledgeSet::insert(ByteView item) {
  if (item.empty()) return;
  items_.insert(std::string(item.begin(), item.end()));
}

void KnowledgeSet::split_tlv(ByteView data, int depth) {
  if (depth > 4) return;
  // Permissive scan; aborts as soon as the data stops looking like fields.
  std::size_t pos = 0;
  std::vector<ByteView> fields;
  while (pos + 5 <= data.size()) {
    std::uint32_t len = load_u32be(data.subspan(pos + 1, 4));
    if (pos + 5 + len > data.size()) return;
    fields.push_back(data.subspan(pos + 5, len));
    pos += 5 + len;
  }
  if (pos != data.size()) return;
  for (ByteView f : fields) {
    insert(f);
    split_tlv(f, depth + 1);
  }
}

void KnowledgeSet::observe_frame(fabric::ConnId conn, bool to_acceptor,
                                 ByteView frame) {
  std::lock_guard lock(mu_);
  ++frames_seen_;
  dirty_ = true;
  insert(frame);
  if (frame.size() < 5) return;
  std::uint8_t type = frame[0];
  ByteView body = frame.subspan(5);
  insert(body);

  if (type == 1 || type == 2) {  // handshake M1 / M2
    auto& hs = handshakes_[conn];
    try {
      tlv::Reader r(body);
      if (type == 1) {
        r.field_u8(1);
        ByteView nonce = r.field(2);
        hs.nonce_c.assign(nonce.begin(), nonce.end());
        ByteView kex = r.field(3);
        hs.kex_pub_c.assign(kex.begin(), kex.end());
        if (auto chain = r.maybe_field(4)) {
          insert(*chain);
          split_tlv(*chain, 0);
        }
      } else {
        ByteView nonce = r.field(1);
        hs.nonce_s.assign(nonce.begin(), nonce.end());
        ByteView kex = r.field(2);
        hs.kex_pub_s.assign(kex.begin(), kex.end());
        ByteView chain = r.field(3);
        insert(chain);
        split_tlv(chain, 0);
      }
    } catch (const tlv::MalformedEncoding&) {
    }
    return;
  }
  if (type == 4 || type == 7 || type == 9) {  // encrypted records
    if (body.size() >= 8) {
      std::uint64_t seq = load_u64be(body);
      ByteView ct = body.subspan(8);
      insert(ct);
      records_.push_back(RecordCt{conn, type, to_acceptor, seq,
                                  Bytes(ct.begin(), ct.end())});
    }
    return;
  }
  split_tlv(body, 0);
}

void KnowledgeSet::add_owned_signing_key(ByteView private_key) {
  std::lock_guard lock(mu_);
  owned_signing_keys_.emplace_back(private_key.begin(), private_key.end());
  insert(private_key);
  dirty_ = true;
}

void KnowledgeSet::add_owned_kex_private(ByteView private_key) {
  std::lock_guard lock(mu_);
  owned_kex_privs_.emplace_back(private_key.begin(), private_key.end());
  insert(private_key);
  dirty_ = true;
}

void KnowledgeSet::add_owned_aead_key(const crypto::AeadKey& key) {
  std::lock_guard lock(mu_);
  owned_aead_keys_.push_back(key);
  insert(key.view());
  dirty_ = true;
}

void KnowledgeSet::add_item(ByteView item) {
  std::lock_guard lock(mu_);
  insert(item);
  dirty_ = true;
}

void KnowledgeSet::close() {
  const std::array<std::uint8_t, 4> dir_c2s = {'c', '2', 's', 0};
  const std::array<std::uint8_t, 4> dir_s2c = {'s', '2', 'c', 0};

  bool changed = true;
  while (changed) {
    changed = false;

    // Key-exchange completion with an owned private half.
    for (const Bytes& priv : owned_kex_privs_) {
      Bytes pub;
      try {
        pub = crypto::KexKeyPair::from_private(priv).public_key;
      } catch (const std::invalid_argument&) {
        continue;
      }
      for (auto& [conn, hs] : handshakes_) {
        if (!hs.complete()) continue;
        Bytes peer;
        if (hs.kex_pub_c == pub) {
          peer = hs.kex_pub_s;
        } else if (hs.kex_pub_s == pub) {
          peer = hs.kex_pub_c;
        } else {
          continue;
        }
        Bytes shared;
        try {
          shared = crypto::kex_shared(priv, peer);
        } catch (const std::invalid_argument&) {
          continue;
        }
        Bytes salt = concat(hs.nonce_c, hs.nonce_s);
        Bytes master =
            crypto::hkdf(shared, salt, to_bytes("decent-hs-v1"), 32);
        if (items_.insert(std::string(master.begin(), master.end())).second) {
          changed = true;
        }
        for (std::string_view info : {"c2s", "s2c"}) {
          auto key = crypto::AeadKey::from_bytes(
              crypto::hkdf(master, {}, to_bytes(info), 32));
          if (std::find(owned_aead_keys_.begin(), owned_aead_keys_.end(),
                        key) == owned_aead_keys_.end()) {
            owned_aead_keys_.push_back(key);
            insert(key.view());
            changed = true;
          }
        }
      }
    }

    // Decryption of observed records with owned keys.
    for (const auto& key : owned_aead_keys_) {
      for (const auto& rec : records_) {
        const auto& dir = rec.to_acceptor ? dir_c2s : dir_s2c;
        Bytes nonce(dir.begin(), dir.end());
        store_u64be(nonce, rec.seq);
        Bytes ad;
        ad.push_back(rec.type);
        ad.insert(ad.end(), dir.begin(), dir.end());
        auto pt = crypto::aead_open(key, nonce, ad, rec.ct);
        if (pt && items_.insert(std::string(pt->begin(), pt->end())).second) {
          split_tlv(*pt, 0);
          changed = true;
        }
      }
    }
  }
}

bool KnowledgeSet::knows(ByteView needle) {
  std::lock_guard lock(mu_);
  if (dirty_) {
    close();
    dirty_ = false;
  }
  std::string target(needle.begin(), needle.end());
  for (const auto& item : items_) {
    if (item.find(target) != std::string::npos) return true;
  }
  return false;
}

std::size_t KnowledgeSet::frame_count() const {
  std::lock_guard lock(mu_);
  return frames_seen_;
}

// --- world construction ---------------------------------------------------------

SimWorld::SimWorld(ScenarioConfig config) : config_(std::move(config)) {
  build();
}

SimWorld::~SimWorld() {
  // Tear the fabric down first: it joins every task that still references
  // components and services.
  fabric_.reset();
}

void SimWorld::build() {
  fabric_ = std::make_unique<fabric::VirtualFabric>(config_.seed);
  fabric_->set_link_latency(config_.link_latency);
  adversary_rng_ = fabric_->fork_rng("adversary");
  ias_ = std::make_unique<ias::IasSim>(fabric_->fork_rng("ias"),
                                       fabric_->clock());

  // Groups and platforms.
  platform::GroupId next_group_id = 1;
  platform::PlatformId next_platform_id = 1;
  for (const auto& p : config_.platforms) {
    if (groups_.find(p.group) == groups_.end()) {
      Rng rng = fabric_->fork_rng("group:" + p.group);
      auto group = platform::AttestationGroup::create(next_group_id++, rng);
      ias_->register_group(group->id, group->key.public_key);
      groups_[p.group] = group;
    }
    Rng rng = fabric_->fork_rng("platform:" + p.name);
    auto plat = platform::Platform::create(next_platform_id++,
                                           groups_[p.group], fabric_->clock(),
                                           rng);
    ias_->register_platform(plat->id(), plat->group_id());
    platforms_[p.name] = plat;
  }

  // Code blobs.
  for (const auto& b : config_.blobs) {
    blobs_[b] = synthetic_blob(*fabric_, b);
  }

  // Issuer enclaves, one per platform.
  auto issuer_code = platform::EnclaveCode::from_blob(issuer_blob());
  for (const auto& p : config_.platforms) {
    std::string host = "host@" + p.name;
    for (const auto& h : config_.hosts) {
      if (h.platform == p.name) {
        host = h.name;
        break;
      }
    }
    auto enclave = platforms_[p.name]->load_enclave(issuer_code, host);
    servers_[p.name] = std::make_unique<server::ServerContext>(
        enclave, fabric_->fork_rng("issuer:" + p.name));
  }
  crypto::Digest256 issuer_measurement = crypto::hash(issuer_blob());

  // Authorization lists (nested definitions must be declared first).
  for (const auto& def : config_.authlists) {
    std::vector<authlist::Entry> entries;
    for (const auto& e : def.entries) {
      crypto::Digest256 digest = e.blob == "server"
                                     ? issuer_measurement
                                     : crypto::hash(blobs_.at(e.blob));
      authlist::AuthListPtr nested;
      if (!e.nested_list.empty()) {
        nested = std::make_shared<authlist::AuthList>(
            authlists_.at(e.nested_list));
      }
      entries.emplace_back(digest, authlist::ServiceName(e.service),
                           std::move(nested));
    }
    authlists_[def.name] = authlist::AuthList::from_entries(std::move(entries));
  }

  // Secrets and stakeholders.
  for (const auto& [name, len] : config_.secrets) {
    Rng rng = fabric_->fork_rng("secret:" + name);
    secrets_[name] = rng.bytes(len);
  }
  for (std::size_t i = 0; i < config_.stakeholders; ++i) {
    Rng rng = fabric_->fork_rng("stakeholder:" + std::to_string(i));
    stakeholders_.push_back(crypto::SigningKeyPair::generate(rng));
  }

  // Adversary visibility: nodes living on malicious hosts.
  for (const auto& c : config_.components) {
    for (const auto& h : config_.hosts) {
      if (h.name == c.host && !h.honest) {
        fabric_->mark_tapped(c.name);
      }
    }
  }
  for (const auto& p : config_.platforms) {
    for (const auto& h : config_.hosts) {
      if (h.platform == p.name && !h.honest) {
        fabric_->mark_tapped(issuer_node(p.name));
        break;
      }
    }
  }
  fabric_->mark_tapped("adversary");
  install_tap();

  server::spawn_ias_service(*ias_, *fabric_, {"ias", "api"});

  std::atomic<bool> done{false};
  std::atomic<bool> failed{false};
  std::string failure;
  fabric_->spawn("bootstrap", [this, &done, &failed, &failure] {
    try {
      bootstrap();
    } catch (const std::exception& e) {
      failure = e.what();
      failed = true;
    }
    done = true;
  });
  while (!done) {
    std::size_t processed = fabric_->run_until(fabric_->now() + kSecond);
    if (processed == 0 && !done) {
      throw std::runtime_error("world bootstrap stalled");
    }
  }
  if (failed) {
    throw std::runtime_error("world bootstrap failed: " + failure);
  }
}

void SimWorld::bootstrap() {
  // Issuers self-attest across the fabric (authority latency applies), then
  // serve certificate requests and refresh on schedule.
  for (const auto& p : config_.platforms) {
    auto& server = servers_.at(p.name);
    auto remote = std::make_unique<server::RemoteIas>(
        *fabric_, fabric::Address{issuer_node(p.name), "ias-client"},
        fabric::Address{"ias", "api"});
    server->self_attest(*remote);
    server->spawn_service(*fabric_, {issuer_node(p.name), "la"}, remote.get());
    server_ias_[p.name] = std::move(remote);
  }

  // Components acquire chains in declaration order.
  for (const auto& c : config_.components) {
    std::string platform_name;
    for (const auto& h : config_.hosts) {
      if (h.name == c.host) platform_name = h.platform;
    }
    if (platform_name.empty()) {
      throw std::runtime_error("component " + c.name + " has unknown host");
    }
    auto code = platform::EnclaveCode::from_blob(blobs_.at(c.blob));
    auto enclave = platforms_.at(platform_name)->load_enclave(code, c.host);

    component::ComponentContext::Options options;
    options.revokers = c.revokers;
    std::string comp_name = c.name;
    options.on_shutdown = [this, comp_name] {
      log_.append(fabric_->now(), "ShutDown", comp_name, "");
    };
    auto ctx = component::ComponentContext::init(
        enclave, authlists_.at(c.authlist), *fabric_, c.name,
        {issuer_node(platform_name), "la"}, ias_->authority_public_key(),
        fabric_->fork_rng("component:" + c.name), options);

    ComponentSlot slot;
    slot.config = c;
    slot.ctx = std::move(ctx);
    components_.emplace(c.name, std::move(slot));
  }

  // Services.
  for (auto& [name, slot] : components_) {
    if (slot.config.is_revoker) {
      revoker::RevokerPolicy policy;
      for (const auto& kp : stakeholders_) {
        policy.stakeholder_keys.push_back(kp.public_key);
      }
      policy.threshold = config_.threshold;
      slot.revoker =
          std::make_unique<revoker::RevokerService>(slot.ctx, policy);
      slot.revoker->spawn_service({name, "svc"});
    } else if (slot.config.is_verifier) {
      verifier::VerifierPolicy policy;
      for (const auto& kp : stakeholders_) {
        policy.stakeholder_keys.push_back(kp.public_key);
      }
      policy.threshold = config_.threshold;
      slot.verifier =
          std::make_unique<verifier::VerifierService>(slot.ctx, policy);
      slot.verifier->spawn_service({name, "svc"});
    } else if (slot.config.serve) {
      spawn_echo_service(slot);
    }
  }

  // Dynamic authorization requests.
  for (auto& [name, slot] : components_) {
    if (slot.config.verified_by.empty()) continue;
    auto& ver = components_.at(slot.config.verified_by);
    if (!ver.verifier) {
      throw std::runtime_error(slot.config.verified_by + " is not a verifier");
    }
    for (std::size_t i = 0; i < config_.threshold; ++i) {
      ver.verifier->submit_approval(verifier::StakeholderApproval::make(
          stakeholders_[i], slot.ctx->measurement(), slot.config.service));
    }
    auto ch = slot.ctx->connect({slot.config.verified_by, "svc"},
                                ver.config.service);
    tlv::Writer w;
    w.field(1, slot.ctx->chain()->encode());
    w.field_str(2, slot.config.service);
    ch->send(wire::encode_msg(wire::kMsgVerifyReq, w.bytes()));
    auto [kind, body] = wire::split_msg(ch->recv(kScriptTimeout));
    ch->close();
    if (kind != wire::kMsgVerifyResp) {
      throw std::runtime_error("verification request failed for " + name);
    }
    tlv::Reader r(body);
    auto cert = certs::VerifiedAppCertificate::decode(r.field(1));
    auto verifier_chain = std::make_shared<const certs::CertChain>(
        certs::CertChain::decode(r.field(2)));
    r.finish();
    slot.ctx->install_verified(std::move(cert), std::move(verifier_chain));
  }

  // Revocation pollers start last.
  for (auto& [name, slot] : components_) {
    if (slot.config.poll_revokers) {
      slot.ctx->start_revocation_polling();
    }
  }
}

void SimWorld::install_tap() {
  fabric_->set_tap([this](fabric::TapEvent& ev) {
    knowledge_.observe_frame(ev.conn, ev.to_acceptor, ev.frame);
    captured_.push_back(ev.frame);
    return adversary_act(ev);
  });
}

fabric::TapAction SimWorld::adversary_act(fabric::TapEvent& ev) {
  const std::string& script = config_.adversary;
  // Scripts act only on scenario traffic; bootstrap runs unmolested (the
  // adversary model constrains runtime interference, not world setup).
  if (!adversary_armed_) {
    return fabric::TapAction::Deliver;
  }
  if (script == "passive" || script.empty()) {
    return fabric::TapAction::Deliver;
  }
  if (script == "drop_all") {
    return fabric::TapAction::Drop;
  }
  if (script.rfind("drop_node:", 0) == 0) {
    std::string node = script.substr(10);
    // Suppress the node's outbound traffic (replies included).
    if (ev.from.node == node) return fabric::TapAction::Drop;
    return fabric::TapAction::Deliver;
  }
  if (script == "tamper") {
    ++tamper_counter_;
    if (!ev.frame.empty() && tamper_counter_ % 3 == 0) {
      std::size_t idx = adversary_rng_.below(ev.frame.size());
      ev.frame[idx] ^= 0x40;
    }
    return fabric::TapAction::Deliver;
  }
  if (script == "duplicate") {
    // Re-inject a copy of every third encrypted record.
    if (!ev.frame.empty() &&
        (ev.frame[0] == 4 || ev.frame[0] == 7 || ev.frame[0] == 9)) {
      ++tamper_counter_;
      if (tamper_counter_ % 3 == 0) {
        fabric_->inject(ev.conn, ev.to_acceptor, ev.frame);
      }
    }
    return fabric::TapAction::Deliver;
  }
  if (script == "active") {
    // Deliver everything untouched, but replay observed M1 frames as fresh
    // connection attempts of the adversary's own.
    if (!ev.frame.empty() && ev.frame[0] == 1 && tamper_counter_ < 3 &&
        ev.to.node != "adversary" && ev.from.node != "adversary") {
      ++tamper_counter_;
      Bytes frame = ev.frame;
      fabric::Address target = ev.to;
      fabric_->schedule_at(fabric_->now() + 10 * kMillisecond, [this, frame,
                                                                target] {
        fabric_->spawn("adversary/replay", [this, frame, target] {
          try {
            auto conn = fabric_->dial({"adversary", "replay"}, target,
                                      kScriptTimeout);
            conn->send(frame);
            Bytes reply = conn->recv(kScriptTimeout);
            std::string outcome = "m2";
            if (!reply.empty() && reply[0] == 8) {
              outcome = "alert";
            } else {
              // Got a server hello for the replayed opening; without the
              // victim's key the best we can do is forge the transcript
              // signature and see what happens.
              tlv::Writer m3;
              m3.field(1, Bytes(64, 0));
              Bytes fake;
              fake.push_back(3);  // M3 record type
              store_u32be(fake, static_cast<std::uint32_t>(m3.bytes().size()));
              append(fake, m3.bytes());
              conn->send(std::move(fake));
              Bytes verdict = conn->recv(kScriptTimeout);
              outcome = !verdict.empty() && verdict[0] == 8 ? "alert"
                                                            : "accepted";
            }
            log_.append(fabric_->now(), "AdversaryReplay", "adversary",
                        target.node + "|" + outcome);
            conn->close();
          } catch (const fabric::TransportError&) {
            log_.append(fabric_->now(), "AdversaryReplay", "adversary",
                        target.node + "|timeout");
          }
        });
      });
    }
    return fabric::TapAction::Deliver;
  }
  return fabric::TapAction::Deliver;
}

void SimWorld::spawn_echo_service(ComponentSlot& slot) {
  auto listener = fabric_->listen({slot.config.name, "svc"});
  auto* slot_ptr = &slot;
  fabric_->spawn(slot.config.name + "/echo", [this, slot_ptr, listener] {
    for (;;) {
      fabric::ConnPtr conn;
      try {
        conn = listener->accept();
      } catch (const fabric::TransportError&) {
        return;
      }
      const auto& cfg = slot_ptr->config;
      try {
        channel::HandshakeConfig hs;
        if (cfg.expect_service.empty()) {
          hs = slot_ptr->ctx->accept_config(channel::Mode::AcceptOpenService,
                                            "");
        } else {
          hs = slot_ptr->ctx->accept_config(
              channel::Mode::AcceptVerifyPeer, cfg.expect_service,
              cfg.expect_verifier_service.empty()
                  ? std::optional<std::string>{}
                  : std::optional<std::string>{cfg.expect_verifier_service});
        }
        auto ch = slot_ptr->ctx->accept(conn, hs);
        for (;;) {
          Bytes payload;
          try {
            payload = ch->recv(kEchoIdleTimeout);
          } catch (const fabric::TransportError&) {
            break;
          } catch (const channel::RecordError& e) {
            log_.append(fabric_->now(), "RecordRejected", cfg.name,
                        e.kind == channel::RecordError::Kind::ReplayDetected
                            ? "REPLAY_DETECTED"
                            : "AUTH_FAILURE");
            break;
          }
          auto [kind, body] = wire::split_msg(payload);
          if (kind != wire::kMsgAppData) continue;
          std::string peer_detail = "anonymous";
          if (ch->peer()) {
            peer_detail = ch->peer()->measurement.hex() + "|" +
                          ch->peer()->authlist_hash.hex();
          }
          log_.append(fabric_->now(), "Accepted", cfg.name,
                      peer_detail + "|" + crypto::hash(body).hex());
          ch->send(payload);  // echo
        }
        ch->close();
      } catch (const channel::HandshakeError& e) {
        log_.append(fabric_->now(), "HandshakeRejected", cfg.name,
                    std::string("accept|") +
                        (e.kind == channel::HandshakeError::Kind::LocalReject
                             ? certs::to_string(e.reason)
                             : "PROTOCOL"));
      } catch (const channel::ResumeError&) {
        log_.append(fabric_->now(), "ResumeRejected", cfg.name, "accept");
      } catch (const channel::RecordError&) {
      } catch (const fabric::TransportError&) {
      } catch (const component::ComponentShutDown&) {
        return;
      } catch (const tlv::MalformedEncoding&) {
      }
    }
  });
}

std::string SimWorld::send_once(
    const std::string& from, const std::string& to,
    const std::string& expected_service, ByteView payload,
    const std::optional<std::string>& verifier_service) {
  auto& slot = components_.at(from);
  try {
    auto ch = slot.ctx->connect({to, "svc"}, expected_service,
                                verifier_service);
    log_.append(fabric_->now(), "HandshakeOk", from, to);
    log_.append(fabric_->now(), "Sent", from,
                slot.ctx->measurement().hex() + "|" +
                    slot.ctx->list().hash().hex() + "|" +
                    crypto::hash(payload).hex());
    ch->send(wire::encode_msg(wire::kMsgAppData, payload));
    Bytes reply = ch->recv(kScriptTimeout);
    ch->close();
    return "";
  } catch (const channel::HandshakeError& e) {
    std::string reason =
        e.kind == channel::HandshakeError::Kind::LocalReject ||
                e.kind == channel::HandshakeError::Kind::RemoteReject
            ? certs::to_string(e.reason)
            : (e.kind == channel::HandshakeError::Kind::TranscriptAuth
                   ? "TRANSCRIPT_AUTH"
                   : "PROTOCOL");
    log_.append(fabric_->now(), "HandshakeRejected", from, to + "|" + reason);
    return reason;
  } catch (const fabric::TransportError&) {
    log_.append(fabric_->now(), "HandshakeRejected", from, to + "|TRANSPORT");
    return "TRANSPORT";
  } catch (const channel::RecordError&) {
    log_.append(fabric_->now(), "RecordRejected", from, to);
    return "RECORD";
  } catch (const component::ComponentShutDown&) {
    log_.append(fabric_->now(), "HandshakeRejected", from, to + "|SHUTDOWN");
    return "SHUTDOWN";
  }
}

void SimWorld::run_action(const ScenarioConfig::Action& action) {
  using Kind = ScenarioConfig::Action::Kind;
  switch (action.kind) {
    case Kind::SendSecret: {
      auto it = secrets_.find(action.payload);
      Bytes payload = it != secrets_.end() ? it->second
                                           : to_bytes(action.payload);
      send_once(action.from, action.to, action.service, payload,
                action.verifier_service.empty()
                    ? std::optional<std::string>{}
                    : std::optional<std::string>{action.verifier_service});
      break;
    }
    case Kind::Leak:
      adversary_leak_component_key(action.from);
      break;
    case Kind::SubmitRevocation: {
      auto& slot = components_.at(action.to);
      if (!slot.revoker) {
        throw std::runtime_error(action.to + " is not a revoker");
      }
      crypto::Digest256 target = blob_digest(action.payload);
      for (std::size_t i = 0; i < config_.threshold; ++i) {
        slot.revoker->submit_revocation(
            revoker::RevocationRequest::make(stakeholders_[i], target));
      }
      log_.append(fabric_->now(), "Revoked", action.to, target.hex());
      break;
    }
    case Kind::IasRevoke: {
      ias_->revoke_platform(platforms_.at(action.payload)->id());
      log_.append(fabric_->now(), "Revoked", "ias", action.payload);
      break;
    }
  }
}

EventLog& SimWorld::run() { return run(config_.run_for); }

EventLog& SimWorld::run(Micros until) {
  adversary_armed_ = true;
  if (!ran_) {
    ran_ = true;
    for (const auto& action : config_.actions) {
      Micros at = std::max(action.at, fabric_->now());
      fabric_->schedule_at(at, [this, action] {
        fabric_->spawn("action", [this, action] {
          try {
            run_action(action);
          } catch (const std::exception& e) {
            log_.append(fabric_->now(), "ActionFailed", action.from, e.what());
          }
        });
      });
    }
  }
  fabric_->run_until(until);
  return log_;
}

void SimWorld::adversary_leak_component_key(const std::string& component_name) {
  auto& slot = components_.at(component_name);
  knowledge_.add_owned_signing_key(slot.ctx->keypair().private_key);
  log_.append(fabric_->now(), "Leak", component_name, "signing-key");
}

bool SimWorld::assert_secrecy(ByteView secret) {
  return !knowledge_.knows(secret);
}

bool SimWorld::assert_secrecy(const std::string& secret_name) {
  return assert_secrecy(secrets_.at(secret_name));
}

bool SimWorld::check_assertions() {
  assertion_failures_.clear();
  auto entries = log_.snapshot();
  for (const auto& a : config_.assertions) {
    std::istringstream in(a);
    std::string kind;
    in >> kind;
    bool ok = true;
    if (kind == "secrecy") {
      std::string name;
      in >> name;
      ok = assert_secrecy(name);
    } else if (kind == "authenticity") {
      ok = assert_authenticity();
    } else if (kind == "shutdown") {
      std::string comp;
      in >> comp;
      ok = component(comp)->state() == component::State::ShutDown;
    } else if (kind == "running") {
      std::string comp;
      in >> comp;
      ok = component(comp)->state() == component::State::Running;
    } else if (kind == "accepted") {
      std::string from, to;
      in >> from >> to;
      ok = std::any_of(entries.begin(), entries.end(), [&](const auto& e) {
        return e.kind == "HandshakeOk" && e.actor == from && e.detail == to;
      });
    } else if (kind == "rejected") {
      std::string from, to, reason;
      in >> from >> to >> reason;
      ok = std::any_of(entries.begin(), entries.end(), [&](const auto& e) {
        return e.kind == "HandshakeRejected" && e.actor == from &&
               e.detail == to + "|" + reason;
      });
    } else {
      ok = false;
    }
    if (!ok) assertion_failures_.push_back(a);
  }
  return assertion_failures_.empty();
}

component::ComponentPtr SimWorld::component(const std::string& name) const {
  return components_.at(name).ctx;
}

server::ServerContext& SimWorld::server_on(const std::string& platform_name) {
  return *servers_.at(platform_name);
}

revoker::RevokerService* SimWorld::revoker_service(
    const std::string& component_name) {
  auto it = components_.find(component_name);
  return it == components_.end() ? nullptr : it->second.revoker.get();
}

verifier::VerifierService* SimWorld::verifier_service(
    const std::string& component_name) {
  auto it = components_.find(component_name);
  return it == components_.end() ? nullptr : it->second.verifier.get();
}

platform::PlatformPtr SimWorld::platform(const std::string& name) const {
  return platforms_.at(name);
}

const Bytes& SimWorld::secret(const std::string& name) const {
  return secrets_.at(name);
}

crypto::Digest256 SimWorld::blob_digest(const std::string& blob_name) const {
  return crypto::hash(blobs_.at(blob_name));
}

const authlist::AuthList& SimWorld::authlist(const std::string& name) const {
  return authlists_.at(name);
}

void SimWorld::set_host_clock_offset(const std::string& host,
                                     std::int64_t offset) {
  host_clock_offsets_[host] = offset;
}

Micros SimWorld::host_now(const std::string& host) const {
  std::int64_t offset = 0;
  auto it = host_clock_offsets_.find(host);
  if (it != host_clock_offsets_.end()) offset = it->second;
  auto now = static_cast<std::int64_t>(fabric_->now());
  return static_cast<Micros>(std::max<std::int64_t>(0, now + offset));
}

}  // namespace decent::sim
