// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "decent/wire.hpp"

namespace decent::bench {

namespace {

constexpr std::uint8_t kRaHello = 40;
constexpr std::uint8_t kRaReply = 41;
constexpr std::uint8_t kPlainHello = 42;
constexpr std::uint8_t kPlainReply = 43;
constexpr std::uint8_t kRecResumeReq = 5;  // shared with the record layer

constexpr std::string_view kRaC2s = "ra-only-c2s";
constexpr std::string_view kRaS2c = "ra-only-s2c";
constexpr std::string_view kRaMaster = "ra-only-master";
constexpr std::string_view kPlainC2s = "plain-c2s";
constexpr std::string_view kPlainS2c = "plain-s2c";
constexpr std::string_view kPlainMaster = "plain-master";

constexpr std::string_view kDhtService = "DecentHT";
constexpr std::string_view kClientService = "BenchClient";

Micros wall_now() {
  return static_cast<Micros>(
      std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

std::string node_name(int i) { return "node" + std::to_string(i); }

Bytes ra_binding(ByteView kex_pub_s, ByteView kex_pub_c, ByteView nonce_c) {
  Bytes all = concat(kex_pub_s, kex_pub_c, nonce_c);
  crypto::Digest256 d = crypto::hash(all);
  return Bytes(d.view().begin(), d.view().end());
}

struct DerivedKeys {
  crypto::AeadKey c2s, s2c;
  Bytes master;
};

DerivedKeys derive(ByteView shared, ByteView salt, std::string_view c2s_info,
                   std::string_view s2c_info, std::string_view master_info) {
  DerivedKeys keys;
  keys.c2s = crypto::AeadKey::from_bytes(
      crypto::hkdf(shared, salt, to_bytes(c2s_info), 32));
  keys.s2c = crypto::AeadKey::from_bytes(
      crypto::hkdf(shared, salt, to_bytes(s2c_info), 32));
  keys.master = crypto::hkdf(shared, salt, to_bytes(master_info), 32);
  return keys;
}

}  // namespace

const char* to_string(ChannelMode mode) {
  switch (mode) {
    case ChannelMode::DecentRA:
      return "decent-ra";
    case ChannelMode::RaOnly:
      return "ra-only";
    case ChannelMode::PlainChannel:
      return "plain";
  }
  return "unknown";
}

std::optional<ChannelMode> mode_from_string(std::string_view name) {
  if (name == "decent-ra") return ChannelMode::DecentRA;
  if (name == "ra-only") return ChannelMode::RaOnly;
  if (name == "plain") return ChannelMode::PlainChannel;
  return std::nullopt;
}

std::string csv_header() {
  return "mode,requests_per_session,n_nodes,target_rps,throughput_rps,"
         "latency_mean_ms,latency_p50_ms,latency_p95_ms,handshakes,"
         "resumptions,ias_calls,saturated";
}

std::string to_csv(const MetricsRow& row) {
  std::ostringstream out;
  out << row.mode << ',' << row.requests_per_session << ',' << row.n_nodes
      << ',' << row.target_throughput << ',' << row.throughput_rps << ','
      << row.latency_mean_ms << ',' << row.latency_p50_ms << ','
      << row.latency_p95_ms << ',' << row.handshakes << ',' << row.resumptions
      << ',' << row.ias_calls << ',' << (row.saturated ? 1 : 0);
  return out.str();
}

// --- client side of the three channel modes ----------------------------------

namespace {

// One logical load generator: opens mode-appropriate sessions to its access
// node, resumes within a session, and renegotiates at session boundaries.
class ModeClient {
 public:
  ModeClient(ChannelMode mode, fabric::Fabric& fabric, std::string name,
             component::ComponentPtr decent_ctx, server::RemoteIas* ias,
             std::uint64_t seed)
      : mode_(mode),
        fabric_(fabric),
        name_(std::move(name)),
        ctx_(std::move(decent_ctx)),
        ias_(ias),
        rng_(seed) {}

  void begin_session(const std::string& node) {
    access_node_ = node;
    ticket_.reset();
  }

  std::uint64_t handshakes() const { return handshakes_; }
  std::uint64_t resumptions() const { return resumptions_; }

  // One YCSB-style operation: a lookup request, then a data request.
  void op(ByteView key, ByteView value, bool is_read) {
    {
      tlv::Writer w;
      w.field_u64(1, dht::key_id(key));
      request(wire::kMsgDhtLookup, w.bytes());
    }
    if (is_read) {
      tlv::Writer w;
      w.field(1, key);
      request(wire::kMsgDhtGet, w.bytes());
    } else {
      tlv::Writer w;
      w.field(1, key);
      w.field(2, value);
      request(wire::kMsgDhtPut, w.bytes());
    }
  }

 private:
  channel::LocalParty raw_party() {
    channel::LocalParty party;
    party.clock = fabric_.clock();
    party.random_bytes = [this](std::size_t n) { return rng_.bytes(n); };
    return party;
  }

  channel::SecureChannel open_full() {
    if (mode_ == ChannelMode::RaOnly) {
      auto conn = fabric_.dial({name_, "out"}, {access_node_, "ra"});
      Bytes nonce_c = rng_.bytes(32);
      auto kex = crypto::KexKeyPair::from_private(rng_.bytes(32));
      tlv::Writer hello;
      hello.field(1, nonce_c);
      hello.field(2, kex.public_key);
      wire::send_frame(conn, kRaHello, hello.bytes());
      auto [type, body] = wire::recv_frame(conn, 30 * kSecond);
      if (type != kRaReply) throw std::runtime_error("ra reply missing");
      tlv::Reader r(body);
      ByteView kex_pub_s = r.field(1);
      auto quote = platform::Quote::decode(r.field(2));
      r.finish();
      // Fresh attestation round-trip: this is where the authority latency
      // model lands on the session path.
      auto report = ias_->verify_quote(quote, rng_.bytes(ias::kNonceSize));
      if (report.verdict != ias::Verdict::Ok) {
        throw std::runtime_error("attestation rejected");
      }
      Bytes expected = ra_binding(kex_pub_s, kex.public_key, nonce_c);
      if (!std::equal(expected.begin(), expected.end(),
                      quote.report_data.begin())) {
        throw std::runtime_error("attestation does not bind the session");
      }
      Bytes shared = crypto::kex_shared(kex.private_key, kex_pub_s);
      DerivedKeys keys = derive(shared, nonce_c, kRaC2s, kRaS2c, kRaMaster);
      return channel::SecureChannel::from_keys(conn, true, keys.c2s, keys.s2c,
                                               keys.master);
    }
    if (mode_ == ChannelMode::PlainChannel) {
      auto conn = fabric_.dial({name_, "out"}, {access_node_, "plain"});
      Bytes nonce_c = rng_.bytes(32);
      auto kex = crypto::KexKeyPair::from_private(rng_.bytes(32));
      tlv::Writer hello;
      hello.field(1, nonce_c);
      hello.field(2, kex.public_key);
      wire::send_frame(conn, kPlainHello, hello.bytes());
      auto [type, body] = wire::recv_frame(conn, 30 * kSecond);
      if (type != kPlainReply) throw std::runtime_error("plain reply missing");
      tlv::Reader r(body);
      ByteView nonce_s = r.field(1);
      ByteView kex_pub_s = r.field(2);
      r.finish();
      Bytes shared = crypto::kex_shared(kex.private_key, kex_pub_s);
      Bytes salt = concat(nonce_c, nonce_s);
      DerivedKeys keys =
          derive(shared, salt, kPlainC2s, kPlainS2c, kPlainMaster);
      return channel::SecureChannel::from_keys(conn, true, keys.c2s, keys.s2c,
                                               keys.master);
    }
    auto conn = fabric_.dial({name_, "out"}, {access_node_, "svc"});
    channel::HandshakeConfig config;
    config.mode = channel::Mode::ConnectVerifyPeer;
    config.expected_peer_service = std::string(kDhtService);
    config.timeout = 30 * kSecond;
    return channel::handshake_connect(conn, ctx_->party(), config);
  }

  Bytes request(std::uint8_t kind, ByteView body) {
    std::optional<channel::SecureChannel> ch;
    if (ticket_) {
      try {
        std::string port = mode_ == ChannelMode::DecentRA
                               ? "svc"
                               : (mode_ == ChannelMode::RaOnly ? "ra" : "plain");
        auto conn = fabric_.dial({name_, "out"}, {access_node_, port});
        channel::LocalParty party =
            mode_ == ChannelMode::DecentRA ? ctx_->party() : raw_party();
        ch = channel::resume_connect(conn, party, *ticket_, 30 * kSecond);
        ++resumptions_;
      } catch (const channel::ResumeError&) {
        ticket_.reset();
      } catch (const fabric::TransportError&) {
        ticket_.reset();
      }
    }
    if (!ch) {
      ch = open_full();
      ++handshakes_;
    }
    ch->send(wire::encode_msg(kind, body));
    Bytes payload = ch->recv(30 * kSecond);
    if (auto fresh = ch->take_resumption(0)) {
      ticket_ = *fresh;
    }
    ch->close();
    auto [resp_kind, resp_body] = wire::split_msg(payload);
    if (resp_kind == wire::kMsgError) {
      throw std::runtime_error("node reported an error");
    }
    return Bytes(resp_body.begin(), resp_body.end());
  }

  ChannelMode mode_;
  fabric::Fabric& fabric_;
  std::string name_;
  component::ComponentPtr ctx_;  // DecentRA only
  server::RemoteIas* ias_;       // RaOnly only
  Rng rng_;
  std::string access_node_;
  std::optional<channel::ResumptionTicket> ticket_;
  std::uint64_t handshakes_ = 0;
  std::uint64_t resumptions_ = 0;
};

}  // namespace

// --- world -------------------------------------------------------------------

struct BenchWorld::Impl {
  WorkloadConfig config;
  ChannelMode mode;
  std::unique_ptr<fabric::RealtimeFabric> fabric;
  std::unique_ptr<ias::IasSim> ias;
  std::shared_ptr<platform::AttestationGroup> group;
  std::vector<platform::PlatformPtr> platforms;  // one per node + clients
  std::vector<std::unique_ptr<server::ServerContext>> servers;
  std::vector<std::unique_ptr<server::RemoteIas>> server_ias;
  authlist::AuthList list;
  std::vector<component::ComponentPtr> node_ctxs;
  std::vector<std::unique_ptr<dht::DhtNode>> nodes;
  std::vector<component::ComponentPtr> client_ctxs;
  std::vector<std::unique_ptr<server::RemoteIas>> client_ias;
  std::vector<Bytes> keys;
  Rng master_rng{0};

  ~Impl() {
    if (fabric) fabric->shutdown();
  }

  void spawn_mode_port(int node_idx) {
    const char* port = mode == ChannelMode::RaOnly ? "ra" : "plain";
    auto listener = fabric->listen({node_name(node_idx), port});
    auto* node = nodes[node_idx].get();
    auto* ctx = node_ctxs[node_idx].get();
    for (int w = 0; w < config.client_workers_per_node; ++w) {
      fabric->spawn(node_name(node_idx) + "/" + port + std::to_string(w),
                    [this, listener, node, ctx] {
        dht::DhtNode::RequesterPool pool;
        Rng rng = master_rng.fork("mode-port");
        for (;;) {
          fabric::ConnPtr conn;
          try {
            conn = listener->accept();
          } catch (const fabric::TransportError&) {
            return;
          }
          try {
            auto [type, body] = wire::recv_frame(conn, 30 * kSecond);
            std::optional<channel::SecureChannel> ch;
            if (type == kRecResumeReq) {
              ch = channel::accept_resumption(conn, ctx->party(),
                                              ctx->ticket_manager(), body,
                                              30 * kSecond);
            } else if (type == kRaHello && mode == ChannelMode::RaOnly) {
              tlv::Reader r(body);
              ByteView nonce_c = r.field(1);
              ByteView kex_pub_c = r.field(2);
              r.finish();
              auto kex = crypto::KexKeyPair::from_private(rng.bytes(32));
              Bytes binding = ra_binding(kex.public_key, kex_pub_c, nonce_c);
              auto quote = ctx->enclave().create_quote(binding);
              tlv::Writer w;
              w.field(1, kex.public_key);
              w.field(2, quote.encode());
              wire::send_frame(conn, kRaReply, w.bytes());
              Bytes shared = crypto::kex_shared(kex.private_key, kex_pub_c);
              DerivedKeys keys = derive(shared, nonce_c, kRaC2s, kRaS2c,
                                        kRaMaster);
              ch = channel::SecureChannel::from_keys(conn, false, keys.s2c,
                                                     keys.c2s, keys.master);
              ch->issue_ticket(ctx->ticket_manager());
            } else if (type == kPlainHello &&
                       mode == ChannelMode::PlainChannel) {
              tlv::Reader r(body);
              ByteView nonce_c = r.field(1);
              ByteView kex_pub_c = r.field(2);
              r.finish();
              Bytes nonce_s = rng.bytes(32);
              auto kex = crypto::KexKeyPair::from_private(rng.bytes(32));
              tlv::Writer w;
              w.field(1, nonce_s);
              w.field(2, kex.public_key);
              wire::send_frame(conn, kPlainReply, w.bytes());
              Bytes shared = crypto::kex_shared(kex.private_key, kex_pub_c);
              Bytes salt = concat(ByteView(nonce_c), ByteView(nonce_s));
              DerivedKeys keys =
                  derive(shared, salt, kPlainC2s, kPlainS2c, kPlainMaster);
              ch = channel::SecureChannel::from_keys(conn, false, keys.s2c,
                                                     keys.c2s, keys.master);
              ch->issue_ticket(ctx->ticket_manager());
            } else {
              conn->close();
              continue;
            }
            node->serve_client(*ch, pool);
            ch->close();
          } catch (const fabric::TransportError&) {
          } catch (const channel::ResumeError&) {
          } catch (const channel::RecordError&) {
          } catch (const tlv::MalformedEncoding&) {
          }
        }
      });
    }
  }
};

BenchWorld::BenchWorld(const WorkloadConfig& config, ChannelMode mode)
    : config_(config), mode_(mode), impl_(new Impl) {
  impl_->config = config;
  impl_->mode = mode;
  impl_->master_rng = Rng(config.seed);
  impl_->fabric =
      std::make_unique<fabric::RealtimeFabric>(config.time_scale);
  auto& fabric = *impl_->fabric;
  fabric.set_link_latency(config.link_latency);

  impl_->ias = std::make_unique<ias::IasSim>(impl_->master_rng.fork("ias"),
                                             fabric.clock());
  {
    Rng rng = impl_->master_rng.fork("group");
    impl_->group = platform::AttestationGroup::create(1, rng);
  }
  impl_->ias->register_group(impl_->group->id, impl_->group->key.public_key);
  server::spawn_ias_service(*impl_->ias, fabric, {"ias", "api"});

  Bytes dht_blob = impl_->master_rng.fork("dht-blob").bytes(96);
  Bytes client_blob = impl_->master_rng.fork("client-blob").bytes(96);
  Bytes issuer_blob = to_bytes(std::string_view("decent-issuer-enclave-v1"));
  auto issuer_code = platform::EnclaveCode::from_blob(issuer_blob);

  int n = config.n_nodes;
  for (int i = 0; i < n + 1; ++i) {
    Rng rng = impl_->master_rng.fork("platform" + std::to_string(i));
    auto plat = platform::Platform::create(
        static_cast<platform::PlatformId>(i + 1), impl_->group,
        fabric.clock(), rng);
    impl_->ias->register_platform(plat->id(), plat->group_id());
    impl_->platforms.push_back(plat);

    std::string host = (i < n ? node_name(i) : std::string("clients")) +
                       ".host";
    auto enclave = plat->load_enclave(issuer_code, host);
    auto server = std::make_unique<server::ServerContext>(
        enclave, impl_->master_rng.fork("issuer" + std::to_string(i)));
    std::string issuer = "issuer" + std::to_string(i);
    auto remote = std::make_unique<server::RemoteIas>(
        fabric, fabric::Address{issuer, "ias-client"},
        fabric::Address{"ias", "api"});
    server->self_attest(*remote);
    server->spawn_service(fabric, {issuer, "la"}, remote.get());
    impl_->server_ias.push_back(std::move(remote));
    impl_->servers.push_back(std::move(server));
  }

  std::vector<authlist::Entry> entries;
  entries.emplace_back(crypto::hash(issuer_blob),
                       authlist::ServiceName(
                           std::string(authlist::kServerService)));
  entries.emplace_back(crypto::hash(dht_blob),
                       authlist::ServiceName(std::string(kDhtService)));
  entries.emplace_back(crypto::hash(client_blob),
                       authlist::ServiceName(std::string(kClientService)));
  impl_->list = authlist::AuthList::from_entries(std::move(entries));

  // Ring nodes with evenly spaced identifiers.
  auto dht_code = platform::EnclaveCode::from_blob(dht_blob);
  std::uint64_t spacing = (~std::uint64_t{0}) / static_cast<std::uint64_t>(n);
  for (int i = 0; i < n; ++i) {
    auto enclave =
        impl_->platforms[i]->load_enclave(dht_code, node_name(i) + ".host");
    auto ctx = component::ComponentContext::init(
        enclave, impl_->list, fabric, node_name(i),
        {"issuer" + std::to_string(i), "la"},
        impl_->ias->authority_public_key(),
        impl_->master_rng.fork("node" + std::to_string(i)), {});
    dht::DhtOptions options;
    options.node_service = std::string(kDhtService);
    options.client_service =
        mode == ChannelMode::DecentRA ? std::string(kClientService) : "";
    options.fixed_id = spacing * static_cast<std::uint64_t>(i);
    options.client_workers = config.client_workers_per_node;
    options.peer_workers = config.peer_workers_per_node;
    auto node = std::make_unique<dht::DhtNode>(ctx, options);
    node->start_service();
    impl_->node_ctxs.push_back(std::move(ctx));
    impl_->nodes.push_back(std::move(node));
  }
  if (mode != ChannelMode::DecentRA) {
    for (int i = 0; i < n; ++i) impl_->spawn_mode_port(i);
  }

  // Ring formation.
  impl_->nodes[0]->create();
  for (int i = 1; i < n; ++i) {
    impl_->nodes[i]->join(impl_->nodes[0]->self_ref());
    for (int r = 0; r < 2; ++r) {
      for (auto& node : impl_->nodes) node->stabilize();
    }
  }
  for (int r = 0; r < 2; ++r) {
    for (auto& node : impl_->nodes) node->stabilize();
    for (auto& node : impl_->nodes) node->fix_fingers();
  }

  // Preload records.
  dht::DhtNode::RequesterPool pool;
  Rng value_rng = impl_->master_rng.fork("values");
  int total = config.records_per_node * n;
  for (int i = 0; i < total; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "user%08d", i);
    Bytes key = to_bytes(std::string_view(buf));
    impl_->nodes[0]->put_pooled(pool, key,
                                value_rng.bytes(config.value_size));
    impl_->keys.push_back(std::move(key));
  }

  // Client identities (only the certificate mode needs chains).
  if (mode == ChannelMode::DecentRA) {
    auto client_code = platform::EnclaveCode::from_blob(client_blob);
    for (int c = 0; c < config.clients; ++c) {
      auto enclave =
          impl_->platforms[n]->load_enclave(client_code, "clients.host");
      auto ctx = component::ComponentContext::init(
          enclave, impl_->list, fabric, "client" + std::to_string(c),
          {"issuer" + std::to_string(n), "la"},
          impl_->ias->authority_public_key(),
          impl_->master_rng.fork("client" + std::to_string(c)), {});
      impl_->client_ctxs.push_back(std::move(ctx));
    }
  } else if (mode == ChannelMode::RaOnly) {
    for (int c = 0; c < config.clients; ++c) {
      impl_->client_ias.push_back(std::make_unique<server::RemoteIas>(
          fabric, fabric::Address{"client" + std::to_string(c), "ias-client"},
          fabric::Address{"ias", "api"}, 60 * kSecond));
    }
  }
}

BenchWorld::~BenchWorld() = default;

namespace {

struct PointResult {
  std::vector<double> latencies_ms;
  std::uint64_t handshakes = 0;
  std::uint64_t resumptions = 0;
  double achieved_rps = 0;
  bool saturated = false;
};

double percentile(std::vector<double>& values, double p) {
  if (values.empty()) return 0;
  std::size_t idx = static_cast<std::size_t>(p * (values.size() - 1));
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[idx];
}

}  // namespace

MetricsRow BenchWorld::run_point(int requests_per_session) {
  return run_point_at_rate(requests_per_session, 0);
}

MetricsRow BenchWorld::run_point_at_rate(int requests_per_session,
                                         double target_rps) {
  auto& impl = *impl_;
  int n_clients = config_.clients;
  std::atomic<int> phase{0};  // 0 warmup, 1 measure, 2 stop
  std::vector<PointResult> results(n_clients);
  std::vector<std::thread> threads;

  std::uint64_t ias_before = 0;
  std::atomic<std::uint64_t> measured_ops{0};

  for (int c = 0; c < n_clients; ++c) {
    threads.emplace_back([&, c] {
      ModeClient client(
          mode_, *impl.fabric, "client" + std::to_string(c),
          mode_ == ChannelMode::DecentRA ? impl.client_ctxs[c] : nullptr,
          mode_ == ChannelMode::RaOnly ? impl.client_ias[c].get() : nullptr,
          config_.seed * 1000 + static_cast<std::uint64_t>(c) + 17);
      Rng rng(config_.seed * 77 + static_cast<std::uint64_t>(c));
      PointResult& out = results[c];
      int session_left = 0;
      int rr = c;
      std::uint64_t hs_base = 0, res_base = 0;
      bool in_measure = false;

      double per_client_rate = target_rps / n_clients;
      Micros interval =
          target_rps > 0 ? static_cast<Micros>(1e6 / per_client_rate) : 0;
      Micros next_fire = wall_now();
      Micros max_lag = 0;

      while (phase.load(std::memory_order_relaxed) < 2) {
        if (session_left == 0) {
          client.begin_session(
              node_name(rr % config_.n_nodes));
          ++rr;
          session_left = requests_per_session;
        }
        if (interval > 0) {
          next_fire += interval;
          Micros now = wall_now();
          if (next_fire > now) {
            std::this_thread::sleep_for(
                std::chrono::microseconds(next_fire - now));
          } else if (now - next_fire > max_lag) {
            max_lag = now - next_fire;
          }
        }
        const Bytes& key = impl.keys[rng.below(impl.keys.size())];
        bool is_read = rng.uniform01() < config_.read_fraction;
        Bytes value = is_read ? Bytes{} : rng.bytes(config_.value_size);
        bool was_measuring = phase.load(std::memory_order_relaxed) == 1;
        if (was_measuring && !in_measure) {
          in_measure = true;
          hs_base = client.handshakes();
          res_base = client.resumptions();
        }
        Micros t0 = wall_now();
        try {
          client.op(key, value, is_read);
        } catch (const std::exception&) {
          --session_left;
          client.begin_session(node_name(rr % config_.n_nodes));
          continue;
        }
        Micros t1 = wall_now();
        if (was_measuring) {
          out.latencies_ms.push_back(static_cast<double>(t1 - t0) / 1000.0);
          measured_ops.fetch_add(1, std::memory_order_relaxed);
        }
        --session_left;
      }
      out.handshakes = client.handshakes() - hs_base;
      out.resumptions = client.resumptions() - res_base;
      out.saturated = interval > 0 && max_lag > 200 * kMillisecond;
    });
  }

  std::this_thread::sleep_for(
      std::chrono::duration<double>(config_.warmup_s));
  ias_before = impl.fabric->counters().ias_report_calls.load();
  phase.store(1);
  Micros measure_start = wall_now();
  std::this_thread::sleep_for(
      std::chrono::duration<double>(config_.measure_s));
  phase.store(2);
  Micros measure_end = wall_now();
  for (auto& t : threads) t.join();
  std::uint64_t ias_after = impl.fabric->counters().ias_report_calls.load();

  MetricsRow row;
  row.mode = to_string(mode_);
  row.requests_per_session = requests_per_session;
  row.n_nodes = config_.n_nodes;
  row.target_throughput = target_rps;
  std::vector<double> all;
  for (auto& r : results) {
    all.insert(all.end(), r.latencies_ms.begin(), r.latencies_ms.end());
    row.handshakes += r.handshakes;
    row.resumptions += r.resumptions;
    row.saturated = row.saturated || r.saturated;
  }
  double seconds =
      static_cast<double>(measure_end - measure_start) / 1e6;
  row.throughput_rps =
      seconds > 0 ? static_cast<double>(measured_ops.load()) / seconds : 0;
  if (!all.empty()) {
    double sum = 0;
    for (double v : all) sum += v;
    row.latency_mean_ms = sum / static_cast<double>(all.size());
    row.latency_p50_ms = percentile(all, 0.50);
    row.latency_p95_ms = percentile(all, 0.95);
  }
  row.ias_calls = ias_after - ias_before;
  if (target_rps > 0 && row.throughput_rps < 0.9 * target_rps) {
    row.saturated = true;
  }
  return row;
}

std::vector<MetricsRow> run_sweep(const WorkloadConfig& config,
                                  ChannelMode mode, std::ostream* csv) {
  BenchWorld world(config, mode);
  std::vector<MetricsRow> rows;
  for (int rps : config.requests_per_session) {
    std::vector<MetricsRow> reps;
    for (int r = 0; r < config.repeats; ++r) {
      reps.push_back(world.run_point(rps));
    }
    std::sort(reps.begin(), reps.end(),
              [](const MetricsRow& a, const MetricsRow& b) {
                return a.throughput_rps < b.throughput_rps;
              });
    rows.push_back(reps[reps.size() / 2]);
    if (csv != nullptr) *csv << to_csv(rows.back()) << '\n';
  }
  return rows;
}

std::vector<MetricsRow> run_latency_curve(const WorkloadConfig& config,
                                          ChannelMode mode,
                                          const std::vector<double>& targets,
                                          int requests_per_session,
                                          std::ostream* csv) {
  BenchWorld world(config, mode);
  std::vector<MetricsRow> rows;
  for (double target : targets) {
    rows.push_back(world.run_point_at_rate(requests_per_session, target));
    if (csv != nullptr) *csv << to_csv(rows.back()) << '\n';
  }
  return rows;
}

std::vector<MetricsRow> run_node_scaling(const WorkloadConfig& config,
                                         const std::vector<ChannelMode>& modes,
                                         const std::vector<int>& node_counts,
                                         int requests_per_session,
                                         std::ostream* csv) {
  std::vector<MetricsRow> rows;
  for (int n : node_counts) {
    WorkloadConfig point = config;
    point.n_nodes = n;
    for (ChannelMode mode : modes) {
      BenchWorld world(point, mode);
      rows.push_back(world.run_point(requests_per_session));
      if (csv != nullptr) *csv << to_csv(rows.back()) << '\n';
    }
  }
  return rows;
}

}  // namespace decent::bench
