// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/dht.hpp"

#include "decent/wire.hpp"

namespace decent::dht {

namespace {

constexpr std::string_view kNodeIdLabel = "decentht-node-id";
constexpr std::string_view kRecordLabelPrefix = "decentht-record:";
constexpr int kMaxHops = 128;

Bytes record_label(ByteView key) {
  Bytes label = to_bytes(kRecordLabelPrefix);
  append(label, key);
  return label;
}

Bytes encode_node_ref(const NodeRef& ref) {
  tlv::Writer w;
  w.field_u64(1, ref.id);
  w.field_str(2, ref.node);
  return w.take();
}

NodeRef decode_node_ref(ByteView data) {
  tlv::Reader r(data);
  NodeRef ref;
  ref.id = r.field_u64(1);
  ref.node = r.field_str(2);
  r.finish();
  return ref;
}

}  // namespace

bool in_half_open(ChordId x, ChordId a, ChordId b) {
  if (a == b) return true;
  if (a < b) return x > a && x <= b;
  return x > a || x <= b;
}

bool in_open(ChordId x, ChordId a, ChordId b) {
  if (a == b) return x != a;
  if (a < b) return x > a && x < b;
  return x > a || x < b;
}

ChordId key_id(ByteView key) {
  return load_u64be(crypto::hash(key).view().subspan(0, 8));
}

ChordId seal_derived_id(const component::ComponentContext& ctx) {
  crypto::AeadKey base = ctx.enclave().derive_seal_key(
      platform::SealPolicy::ByMeasurement, to_bytes(kNodeIdLabel));
  Bytes out = crypto::hkdf(base.view(), ctx.list().hash().view(),
                           to_bytes(kNodeIdLabel), 8);
  return load_u64be(out);
}

DhtNode::DhtNode(component::ComponentPtr ctx, DhtOptions options)
    : ctx_(std::move(ctx)), options_(std::move(options)) {
  self_.id = options_.fixed_id ? *options_.fixed_id : seal_derived_id(*ctx_);
  self_.node = ctx_->node_name();
  successor_ = self_;
  fingers_.fill(self_);
}

void DhtNode::create() {
  std::lock_guard lock(mu_);
  successor_ = self_;
  predecessor_ = self_;
  fingers_.fill(self_);
}

NodeRef DhtNode::successor() const {
  std::lock_guard lock(mu_);
  return successor_;
}

std::optional<NodeRef> DhtNode::predecessor() const {
  std::lock_guard lock(mu_);
  return predecessor_;
}

std::size_t DhtNode::store_size() const {
  std::lock_guard lock(mu_);
  return store_.size();
}

std::vector<Bytes> DhtNode::storage_dump() const {
  std::lock_guard lock(mu_);
  std::vector<Bytes> out;
  out.reserve(store_.size());
  for (const auto& [key, blob] : store_) {
    out.push_back(blob.encode());
  }
  return out;
}

bool DhtNode::corrupt_record(ByteView key) {
  std::lock_guard lock(mu_);
  auto it = store_.find(std::string(key.begin(), key.end()));
  if (it == store_.end() || it->second.ciphertext.empty()) return false;
  it->second.ciphertext[0] ^= 0x01;
  return true;
}

NodeRef DhtNode::closest_preceding(ChordId target) const {
  for (int i = kFingerBits - 1; i >= 0; --i) {
    if (in_open(fingers_[i].id, self_.id, target) && !(fingers_[i] == self_)) {
      return fingers_[i];
    }
  }
  return self_;
}

std::pair<NodeRef, bool> DhtNode::local_lookup_step(ChordId target) const {
  std::lock_guard lock(mu_);
  if (in_half_open(target, self_.id, successor_.id)) {
    return {successor_, true};
  }
  NodeRef next = closest_preceding(target);
  if (next == self_) {
    return {successor_, true};
  }
  return {next, false};
}

Bytes DhtNode::peer_rpc(Pool& pool, const NodeRef& target, std::uint8_t kind,
                        ByteView body) {
  fabric::Address addr{target.node, "peer"};
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      std::shared_ptr<channel::SecureChannel> ch;
      auto ticket = pool.tickets_.find(target.node);
      if (ticket != pool.tickets_.end()) {
        try {
          ch = ctx_->resume(addr, ticket->second);
        } catch (const channel::ResumeError&) {
          pool.tickets_.erase(target.node);
          ch = ctx_->connect(addr, options_.node_service);
        }
      } else {
        ch = ctx_->connect(addr, options_.node_service);
      }
      ch->send(wire::encode_msg(kind, body));
      Bytes payload = ch->recv(options_.rpc_timeout);
      if (auto fresh = ch->take_resumption(0)) {
        pool.tickets_[target.node] = *fresh;
      }
      ch->close();
      auto [resp_kind, resp_body] = wire::split_msg(payload);
      if (resp_kind == wire::kMsgError) {
        throw LookupFailed("peer " + target.node + " reported an error");
      }
      return Bytes(resp_body.begin(), resp_body.end());
    } catch (const fabric::TransportError&) {
      pool.tickets_.erase(target.node);
      if (attempt == 1) {
        throw LookupFailed("peer " + target.node + " unreachable");
      }
    } catch (const channel::RecordError&) {
      pool.tickets_.erase(target.node);
      if (attempt == 1) {
        throw LookupFailed("peer " + target.node + " record failure");
      }
    }
    // HandshakeError propagates: an authorization rejection will not heal
    // on retry.
  }
  throw LookupFailed("unreachable");
}

NodeRef DhtNode::lookup_from(Pool& pool, NodeRef start, ChordId target,
                             OpStats* stats) {
  NodeRef current = start;
  for (int hop = 0; hop < kMaxHops; ++hop) {
    NodeRef next;
    bool final = false;
    if (current == self_) {
      std::tie(next, final) = local_lookup_step(target);
    } else {
      tlv::Writer w;
      w.field_u64(1, target);
      Bytes resp = peer_rpc(pool, current, wire::kMsgDhtLookup, w.bytes());
      if (stats != nullptr) ++stats->hops;
      tlv::Reader r(resp);
      next.id = r.field_u64(1);
      next.node = r.field_str(2);
      final = r.field_u8(3) != 0;
      r.finish();
    }
    if (final) return next;
    if (next == current) return next;
    current = next;
  }
  throw LookupFailed("no progress after " + std::to_string(kMaxHops) +
                     " hops");
}

NodeRef DhtNode::lookup(ChordId target, OpStats* stats) {
  Pool pool;
  return lookup_from(pool, self_, target, stats);
}

void DhtNode::join(const NodeRef& bootstrap) {
  Pool pool;
  NodeRef succ = lookup_from(pool, bootstrap, self_.id, nullptr);
  std::lock_guard lock(mu_);
  predecessor_.reset();
  successor_ = succ;
  fingers_.fill(succ);
}

void DhtNode::stabilize() {
  Pool pool;
  NodeRef succ = successor();
  std::optional<NodeRef> x;
  if (succ == self_) {
    x = predecessor();
  } else {
    Bytes resp = peer_rpc(pool, succ, wire::kMsgDhtGetPred, {});
    tlv::Reader r(resp);
    if (r.field_u8(1) != 0) {
      NodeRef ref;
      ref.id = r.field_u64(2);
      ref.node = r.field_str(3);
      x = ref;
    }
    r.finish();
  }
  if (x && in_open(x->id, self_.id, succ.id) && !(*x == self_)) {
    std::lock_guard lock(mu_);
    successor_ = *x;
    fingers_[0] = *x;
    succ = *x;
  }
  if (succ == self_) {
    std::lock_guard lock(mu_);
    if (!predecessor_) predecessor_ = self_;
  } else {
    peer_rpc(pool, succ, wire::kMsgDhtNotify, encode_node_ref(self_));
  }
}

void DhtNode::fix_fingers() {
  Pool pool;
  for (int i = 0; i < kFingerBits; ++i) {
    ChordId point = self_.id + (ChordId{1} << i);
    NodeRef owner = lookup_from(pool, self_, point, nullptr);
    std::lock_guard lock(mu_);
    fingers_[i] = owner;
    if (i == 0) successor_ = fingers_[0];
  }
}

void DhtNode::store_local(ByteView key, ByteView value) {
  component::SealedBlob blob = ctx_->seal(record_label(key), value);
  std::lock_guard lock(mu_);
  store_[std::string(key.begin(), key.end())] = std::move(blob);
}

std::optional<Bytes> DhtNode::load_local(ByteView key, bool& tampered) {
  tampered = false;
  component::SealedBlob blob;
  {
    std::lock_guard lock(mu_);
    auto it = store_.find(std::string(key.begin(), key.end()));
    if (it == store_.end()) return std::nullopt;
    blob = it->second;
  }
  auto value = ctx_->unseal(blob);
  if (!value) {
    tampered = true;
    return std::nullopt;
  }
  return value;
}

void DhtNode::put(ByteView key, ByteView value, OpStats* stats) {
  Pool pool;
  NodeRef owner = lookup_from(pool, self_, key_id(key), stats);
  if (owner == self_) {
    store_local(key, value);
    return;
  }
  tlv::Writer w;
  w.field(1, key);
  w.field(2, value);
  peer_rpc(pool, owner, wire::kMsgDhtPut, w.bytes());
}

std::optional<Bytes> DhtNode::get(ByteView key, OpStats* stats) {
  Pool pool;
  NodeRef owner = lookup_from(pool, self_, key_id(key), stats);
  if (owner == self_) {
    bool tampered = false;
    auto value = load_local(key, tampered);
    if (tampered) throw RecordTampered();
    return value;
  }
  tlv::Writer w;
  w.field(1, key);
  Bytes resp = peer_rpc(pool, owner, wire::kMsgDhtGet, w.bytes());
  tlv::Reader r(resp);
  std::uint8_t status = r.field_u8(1);
  if (status == 2) throw RecordTampered();
  if (status == 1) {
    r.finish();
    return std::nullopt;
  }
  ByteView value = r.field(2);
  r.finish();
  return Bytes(value.begin(), value.end());
}

Bytes DhtNode::handle_peer_msg(std::uint8_t kind, ByteView body) {
  switch (kind) {
    case wire::kMsgDhtLookup: {
      tlv::Reader r(body);
      ChordId target = r.field_u64(1);
      r.finish();
      auto [next, final] = local_lookup_step(target);
      tlv::Writer w;
      w.field_u64(1, next.id);
      w.field_str(2, next.node);
      w.field_u8(3, final ? 1 : 0);
      return wire::encode_msg(wire::kMsgDhtLookupResp, w.bytes());
    }
    case wire::kMsgDhtGetPred: {
      auto pred = predecessor();
      tlv::Writer w;
      if (pred) {
        w.field_u8(1, 1);
        w.field_u64(2, pred->id);
        w.field_str(3, pred->node);
      } else {
        w.field_u8(1, 0);
      }
      return wire::encode_msg(wire::kMsgDhtGetPredResp, w.bytes());
    }
    case wire::kMsgDhtNotify: {
      NodeRef candidate = decode_node_ref(body);
      std::lock_guard lock(mu_);
      if (!predecessor_ ||
          in_open(candidate.id, predecessor_->id, self_.id)) {
        predecessor_ = candidate;
      }
      return wire::encode_msg(wire::kMsgOk, {});
    }
    case wire::kMsgDhtPut: {
      tlv::Reader r(body);
      ByteView key = r.field(1);
      ByteView value = r.field(2);
      r.finish();
      store_local(key, value);
      return wire::encode_msg(wire::kMsgDhtPutResp, {});
    }
    case wire::kMsgDhtGet: {
      tlv::Reader r(body);
      ByteView key = r.field(1);
      r.finish();
      bool tampered = false;
      auto value = load_local(key, tampered);
      tlv::Writer w;
      if (tampered) {
        w.field_u8(1, 2);
      } else if (!value) {
        w.field_u8(1, 1);
      } else {
        w.field_u8(1, 0);
        w.field(2, *value);
      }
      return wire::encode_msg(wire::kMsgDhtGetResp, w.bytes());
    }
    default:
      return wire::encode_msg(wire::kMsgError, {});
  }
}

void DhtNode::serve_peer(channel::SecureChannel& ch) {
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
      ch.send(handle_peer_msg(kind, body));
    } catch (const tlv::MalformedEncoding&) {
      ch.send(wire::encode_msg(wire::kMsgError, {}));
    }
  }
}

void DhtNode::serve_client(channel::SecureChannel& ch, RequesterPool& pool) {
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
      switch (kind) {
        case wire::kMsgDhtLookup: {
          tlv::Reader r(body);
          ChordId target = r.field_u64(1);
          r.finish();
          NodeRef owner = lookup_from(pool, self_, target, nullptr);
          tlv::Writer w;
          w.field_u64(1, owner.id);
          w.field_str(2, owner.node);
          w.field_u8(3, 1);
          ch.send(wire::encode_msg(wire::kMsgDhtLookupResp, w.bytes()));
          break;
        }
        case wire::kMsgDhtPut: {
          tlv::Reader r(body);
          ByteView key = r.field(1);
          ByteView value = r.field(2);
          r.finish();
          put_pooled(pool, key, value);
          ch.send(wire::encode_msg(wire::kMsgDhtPutResp, {}));
          break;
        }
        case wire::kMsgDhtGet: {
          tlv::Reader r(body);
          ByteView key = r.field(1);
          r.finish();
          tlv::Writer w;
          try {
            auto value = get_pooled(pool, key);
            if (value) {
              w.field_u8(1, 0);
              w.field(2, *value);
            } else {
              w.field_u8(1, 1);
            }
          } catch (const RecordTampered&) {
            w.field_u8(1, 2);
          }
          ch.send(wire::encode_msg(wire::kMsgDhtGetResp, w.bytes()));
          break;
        }
        default:
          ch.send(wire::encode_msg(wire::kMsgError, {}));
      }
    } catch (const tlv::MalformedEncoding&) {
      ch.send(wire::encode_msg(wire::kMsgError, {}));
    } catch (const LookupFailed&) {
      ch.send(wire::encode_msg(wire::kMsgError, {}));
    } catch (const channel::HandshakeError&) {
      ch.send(wire::encode_msg(wire::kMsgError, {}));
    }
  }
}

void DhtNode::put_pooled(RequesterPool& pool, ByteView key, ByteView value) {
  NodeRef owner = lookup_from(pool, self_, key_id(key), nullptr);
  if (owner == self_) {
    store_local(key, value);
    return;
  }
  tlv::Writer w;
  w.field(1, key);
  w.field(2, value);
  peer_rpc(pool, owner, wire::kMsgDhtPut, w.bytes());
}

std::optional<Bytes> DhtNode::get_pooled(RequesterPool& pool, ByteView key) {
  NodeRef owner = lookup_from(pool, self_, key_id(key), nullptr);
  if (owner == self_) {
    bool tampered = false;
    auto value = load_local(key, tampered);
    if (tampered) throw RecordTampered();
    return value;
  }
  tlv::Writer w;
  w.field(1, key);
  Bytes resp = peer_rpc(pool, owner, wire::kMsgDhtGet, w.bytes());
  tlv::Reader r(resp);
  std::uint8_t status = r.field_u8(1);
  if (status == 2) throw RecordTampered();
  if (status == 1) {
    r.finish();
    return std::nullopt;
  }
  ByteView value = r.field(2);
  r.finish();
  return Bytes(value.begin(), value.end());
}

void DhtNode::start_service() {
  auto& fabric = ctx_->fabric();
  auto peer_listener = fabric.listen({self_.node, "peer"});
  for (int i = 0; i < options_.peer_workers; ++i) {
    fabric.spawn(self_.node + "/peer" + std::to_string(i),
                 [this, peer_listener] {
      for (;;) {
        fabric::ConnPtr conn;
        try {
          conn = peer_listener->accept();
        } catch (const fabric::TransportError&) {
          return;
        }
        try {
          auto config = ctx_->accept_config(channel::Mode::AcceptVerifyPeer,
                                            options_.node_service);
          auto ch = ctx_->accept(conn, config);
          serve_peer(*ch);
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

  auto client_listener = fabric.listen({self_.node, "svc"});
  for (int i = 0; i < options_.client_workers; ++i) {
    fabric.spawn(self_.node + "/svc" + std::to_string(i),
                 [this, client_listener] {
      RequesterPool pool;
      for (;;) {
        fabric::ConnPtr conn;
        try {
          conn = client_listener->accept();
        } catch (const fabric::TransportError&) {
          return;
        }
        try {
          channel::HandshakeConfig config;
          if (options_.client_service.empty()) {
            config = ctx_->accept_config(channel::Mode::AcceptOpenService, "");
          } else {
            config = ctx_->accept_config(channel::Mode::AcceptVerifyPeer,
                                         options_.client_service);
          }
          auto ch = ctx_->accept(conn, config);
          serve_client(*ch, pool);
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
}

DhtClient::DhtClient(component::ComponentPtr ctx, std::string dht_service,
                     Micros rpc_timeout)
    : ctx_(std::move(ctx)),
      dht_service_(std::move(dht_service)),
      rpc_timeout_(rpc_timeout) {}

void DhtClient::end_session() { ticket_.reset(); }

void DhtClient::set_access_node(const std::string& node) {
  if (access_node_ != node) {
    access_node_ = node;
    ticket_.reset();
  }
}

Bytes DhtClient::request(std::uint8_t kind, ByteView body) {
  fabric::Address addr{access_node_, "svc"};
  std::shared_ptr<channel::SecureChannel> ch;
  if (ticket_) {
    try {
      ch = ctx_->resume(addr, *ticket_);
      ++resumptions_;
    } catch (const channel::ResumeError&) {
      ticket_.reset();
    } catch (const fabric::TransportError&) {
      ticket_.reset();
    }
  }
  if (!ch) {
    ch = ctx_->connect(addr, dht_service_);
    ++full_handshakes_;
  }
  ch->send(wire::encode_msg(kind, body));
  Bytes payload = ch->recv(rpc_timeout_);
  if (auto fresh = ch->take_resumption(0)) {
    ticket_ = *fresh;
  }
  ch->close();
  auto [resp_kind, resp_body] = wire::split_msg(payload);
  if (resp_kind == wire::kMsgError) {
    throw LookupFailed("access node reported an error");
  }
  return Bytes(resp_body.begin(), resp_body.end());
}

void DhtClient::put(ByteView key, ByteView value) {
  {
    tlv::Writer w;
    w.field_u64(1, key_id(key));
    request(wire::kMsgDhtLookup, w.bytes());
  }
  tlv::Writer w;
  w.field(1, key);
  w.field(2, value);
  request(wire::kMsgDhtPut, w.bytes());
}

std::optional<Bytes> DhtClient::get(ByteView key) {
  {
    tlv::Writer w;
    w.field_u64(1, key_id(key));
    request(wire::kMsgDhtLookup, w.bytes());
  }
  tlv::Writer w;
  w.field(1, key);
  Bytes resp = request(wire::kMsgDhtGet, w.bytes());
  tlv::Reader r(resp);
  std::uint8_t status = r.field_u8(1);
  if (status == 2) throw RecordTampered();
  if (status == 1) {
    r.finish();
    return std::nullopt;
  }
  ByteView value = r.field(2);
  r.finish();
  return Bytes(value.begin(), value.end());
}

}  // namespace decent::dht
