// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/server.hpp"

#include "decent/wire.hpp"

namespace decent::server {

namespace {

constexpr std::string_view kLaC2sInfo = "decent-la-c2s";
constexpr std::string_view kLaS2cInfo = "decent-la-s2c";
const std::array<std::uint8_t, 4> kLaDirC2s = {'l', 'a', 'c', 0};
const std::array<std::uint8_t, 4> kLaDirS2c = {'l', 'a', 's', 0};

Bytes la_nonce(const std::array<std::uint8_t, 4>& dir) {
  Bytes nonce(dir.begin(), dir.end());
  store_u64be(nonce, 0);  // one message per direction on an LA channel
  return nonce;
}

Bytes la_ad(std::uint8_t type, const std::array<std::uint8_t, 4>& dir) {
  Bytes ad;
  ad.push_back(type);
  ad.insert(ad.end(), dir.begin(), dir.end());
  return ad;
}

void send_la_error(const fabric::ConnPtr& conn, std::string_view what) {
  tlv::Writer w;
  w.field_str(1, what);
  wire::send_frame(conn, wire::kLaError, w.bytes());
}

}  // namespace

// --- authority wire protocol -----------------------------------------------

ias::IasReport RemoteIas::verify_quote(const platform::Quote& quote,
                                       ByteView nonce) {
  auto conn = fabric_.dial(self_node_, ias_addr_, timeout_);
  tlv::Writer w;
  w.field(1, quote.encode());
  w.field(2, nonce);
  wire::send_frame(conn, wire::kIasVerifyReq, w.bytes());
  auto [type, body] = wire::recv_frame(conn, timeout_);
  conn->close();
  if (type != wire::kIasVerifyResp) {
    throw SelfAttestFailed("authority returned error frame");
  }
  tlv::Reader r(body);
  auto report = ias::IasReport::decode(r.field(1));
  r.finish();
  return report;
}

ias::SigRl RemoteIas::get_sigrl(platform::GroupId group) {
  auto conn = fabric_.dial(self_node_, ias_addr_, timeout_);
  tlv::Writer w;
  w.field_u64(1, group);
  wire::send_frame(conn, wire::kIasSigrlReq, w.bytes());
  auto [type, body] = wire::recv_frame(conn, timeout_);
  conn->close();
  if (type != wire::kIasSigrlResp) {
    throw ias::UnknownGroup(group);
  }
  tlv::Reader r(body);
  auto rl = ias::SigRl::decode(r.field(1));
  r.finish();
  return rl;
}

void serve_ias_conn(ias::IasSim& sim, fabric::Fabric& fabric,
                    fabric::ConnPtr conn) {
  for (;;) {
    std::uint8_t type;
    Bytes body;
    try {
      std::tie(type, body) = wire::recv_frame(conn, fabric::kNoTimeout);
    } catch (const fabric::TransportError&) {
      return;  // conn closed
    } catch (const tlv::MalformedEncoding&) {
      return;
    }
    try {
      if (type == wire::kIasVerifyReq) {
        tlv::Reader r(body);
        auto quote = platform::Quote::decode(r.field(1));
        ByteView nonce = r.field(2);
        auto report = sim.verify_quote(quote, nonce);
        fabric.counters().ias_report_calls.fetch_add(1,
                                                     std::memory_order_relaxed);
        fabric.sleep_for(sim.sample_report_delay());
        tlv::Writer w;
        w.field(1, report.encode());
        wire::send_frame(conn, wire::kIasVerifyResp, w.bytes());
      } else if (type == wire::kIasSigrlReq) {
        tlv::Reader r(body);
        auto group = r.field_u64(1);
        auto rl = sim.get_sigrl(group);
        fabric.counters().ias_sigrl_calls.fetch_add(1,
                                                    std::memory_order_relaxed);
        fabric.sleep_for(sim.sample_sigrl_delay());
        tlv::Writer w;
        w.field(1, rl.encode());
        wire::send_frame(conn, wire::kIasSigrlResp, w.bytes());
      } else {
        wire::send_frame(conn, wire::kIasError, {});
      }
    } catch (const ias::UnknownGroup&) {
      wire::send_frame(conn, wire::kIasError, {});
    } catch (const tlv::MalformedEncoding&) {
      wire::send_frame(conn, wire::kIasError, {});
    } catch (const fabric::TransportError&) {
      return;
    }
  }
}

fabric::ListenerPtr spawn_ias_service(ias::IasSim& sim, fabric::Fabric& fabric,
                                      const fabric::Address& addr) {
  auto listener = fabric.listen(addr);
  fabric.spawn(addr.node + "/accept", [&sim, &fabric, listener] {
    std::uint64_t conn_no = 0;
    for (;;) {
      fabric::ConnPtr conn;
      try {
        conn = listener->accept();
      } catch (const fabric::TransportError&) {
        return;
      }
      fabric.spawn(listener->addr().node + "/conn" + std::to_string(conn_no++),
                   [&sim, &fabric, conn] { serve_ias_conn(sim, fabric, conn); });
    }
  });
  return listener;
}

// --- server context ---------------------------------------------------------

ServerContext::ServerContext(platform::EnclaveHandle enclave, Rng rng,
                             RefreshPolicy policy)
    : enclave_(std::move(enclave)), policy_(policy), rng_(rng) {
  keypair_ = crypto::SigningKeyPair::generate(rng_);
}

void ServerContext::self_attest(IasFacade& ias) {
  Bytes nonce;
  {
    std::lock_guard lock(mu_);
    nonce = rng_.bytes(ias::kNonceSize);
  }
  platform::Quote quote = enclave_.create_quote(keypair_.fingerprint.view());
  ias::IasReport report = ias.verify_quote(quote, nonce);
  if (report.verdict != ias::Verdict::Ok) {
    std::lock_guard lock(mu_);
    serving_ = false;
    throw SelfAttestFailed(std::string("authority verdict ") +
                           ias::to_string(report.verdict));
  }
  if (report.nonce != nonce) {
    std::lock_guard lock(mu_);
    serving_ = false;
    throw SelfAttestFailed("authority did not echo our nonce");
  }

  auto cert = std::make_shared<certs::SaCertificate>();
  cert->server_public_key = keypair_.public_key;
  cert->ias_report = std::move(report);
  cert->not_before = enclave_.trusted_now();
  cert->not_after = cert->not_before + policy_.lifetime;
  cert->self_signature =
      crypto::sign(keypair_.private_key, cert->signed_payload());

  std::lock_guard lock(mu_);
  sa_cert_ = std::move(cert);
  attested_at_ = enclave_.trusted_now();
  serving_ = true;
}

void ServerContext::refresh(IasFacade& ias) { self_attest(ias); }

bool ServerContext::serving() const {
  std::lock_guard lock(mu_);
  return serving_;
}

Micros ServerContext::refresh_due() const {
  std::lock_guard lock(mu_);
  return attested_at_ +
         static_cast<Micros>(static_cast<double>(policy_.lifetime) *
                             policy_.refresh_fraction);
}

std::shared_ptr<const certs::SaCertificate> ServerContext::sa_certificate()
    const {
  std::lock_guard lock(mu_);
  return sa_cert_;
}

void ServerContext::la_issue(fabric::ConnPtr conn, Micros timeout) {
  auto sa = sa_certificate();
  if (!sa || !serving()) {
    send_la_error(conn, "issuer not serving");
    throw LaVerifyFailed("issuer not serving");
  }

  // Peer hello: ephemeral public plus a local report binding it, with the
  // component's identity-key fingerprint in the report's second half.
  auto [type, body] = wire::recv_frame(conn, timeout);
  if (type != wire::kLaHello) {
    send_la_error(conn, "expected hello");
    throw LaVerifyFailed("unexpected frame");
  }
  Bytes kex_pub_c;
  platform::LocalReport peer_report;
  try {
    tlv::Reader r(body);
    ByteView v = r.field(1);
    kex_pub_c.assign(v.begin(), v.end());
    peer_report = platform::LocalReport::decode(r.field(2));
    r.finish();
  } catch (const tlv::MalformedEncoding& e) {
    send_la_error(conn, e.what());
    throw;
  }
  if (!enclave_.verify_local_report(peer_report)) {
    send_la_error(conn, "local report not verifiable on this platform");
    throw LaVerifyFailed("peer local report invalid");
  }
  crypto::Digest256 kex_fp = crypto::hash(kex_pub_c);
  if (!std::equal(kex_fp.bytes.begin(), kex_fp.bytes.end(),
                  peer_report.report_data.begin())) {
    send_la_error(conn, "report does not bind the session key");
    throw LaVerifyFailed("kex binding mismatch");
  }

  Bytes kex_seed;
  {
    std::lock_guard lock(mu_);
    kex_seed = rng_.bytes(32);
  }
  crypto::KexKeyPair kex = crypto::KexKeyPair::from_private(kex_seed);
  platform::LocalReport own_report =
      enclave_.create_local_report(crypto::hash(kex.public_key).view());
  {
    tlv::Writer w;
    w.field(1, kex.public_key);
    w.field(2, own_report.encode());
    wire::send_frame(conn, wire::kLaHelloReply, w.bytes());
  }

  Bytes shared = crypto::kex_shared(kex.private_key, kex_pub_c);
  auto key_c2s = crypto::AeadKey::from_bytes(
      crypto::hkdf(shared, {}, to_bytes(kLaC2sInfo), 32));
  auto key_s2c = crypto::AeadKey::from_bytes(
      crypto::hkdf(shared, {}, to_bytes(kLaS2cInfo), 32));

  auto [req_type, req_body] = wire::recv_frame(conn, timeout);
  if (req_type != wire::kLaIssueReq) {
    send_la_error(conn, "expected issue request");
    throw LaVerifyFailed("unexpected frame");
  }
  auto pt = crypto::aead_open(key_c2s, la_nonce(kLaDirC2s),
                              la_ad(wire::kLaIssueReq, kLaDirC2s), req_body);
  if (!pt) {
    send_la_error(conn, "request failed authentication");
    throw LaVerifyFailed("issue request tampered");
  }

  Bytes component_public_key;
  Bytes authlist_bytes;
  try {
    tlv::Reader r(*pt);
    ByteView v = r.field(1);
    component_public_key.assign(v.begin(), v.end());
    v = r.field(2);
    authlist_bytes.assign(v.begin(), v.end());
    r.finish();
  } catch (const tlv::MalformedEncoding& e) {
    send_la_error(conn, e.what());
    throw;
  }

  // The report's trailing 32 bytes must name the identity key we certify.
  crypto::Digest256 id_fp = crypto::key_fingerprint(component_public_key);
  if (!std::equal(id_fp.bytes.begin(), id_fp.bytes.end(),
                  peer_report.report_data.begin() + crypto::kDigestSize)) {
    send_la_error(conn, "report does not bind the identity key");
    throw LaVerifyFailed("identity binding mismatch");
  }

  authlist::AuthList list;
  try {
    list = authlist::AuthList::decode(authlist_bytes);
  } catch (const tlv::MalformedEncoding& e) {
    send_la_error(conn, e.what());
    throw;
  }

  certs::ComponentCertificate cert;
  cert.component_public_key = std::move(component_public_key);
  cert.component_measurement = peer_report.measurement;
  cert.authlist_bytes = list.encoded();
  cert.issued_at = enclave_.trusted_now();
  cert.signature = crypto::sign(keypair_.private_key, cert.signed_payload());

  tlv::Writer w;
  w.field(1, cert.encode());
  w.field(2, sa->encode());
  Bytes ct = crypto::aead_seal(key_s2c, la_nonce(kLaDirS2c),
                               la_ad(wire::kLaIssueResp, kLaDirS2c), w.bytes());
  wire::send_frame(conn, wire::kLaIssueResp, ct);
}

void ServerContext::spawn_service(fabric::Fabric& fabric,
                                  const fabric::Address& la_addr,
                                  IasFacade* refresh_ias) {
  auto listener = fabric.listen(la_addr);
  fabric.spawn(la_addr.node + "/issuer", [this, listener] {
    for (;;) {
      fabric::ConnPtr conn;
      try {
        conn = listener->accept();
      } catch (const fabric::TransportError&) {
        return;
      }
      try {
        la_issue(conn);
      } catch (const LaVerifyFailed&) {
      } catch (const tlv::MalformedEncoding&) {
      } catch (const fabric::TransportError&) {
      }
      conn->close();
    }
  });
  if (refresh_ias != nullptr) {
    fabric.spawn(la_addr.node + "/refresh", [this, &fabric, refresh_ias] {
      for (;;) {
        fabric.sleep_until(refresh_due());
        try {
          refresh(*refresh_ias);
        } catch (const SelfAttestFailed&) {
          return;  // stop issuing; the old certificate expires on its own
        } catch (const fabric::TransportError&) {
          return;
        }
      }
    });
  }
}

}  // namespace decent::server
