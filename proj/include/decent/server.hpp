// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <mutex>

#include "decent/certs.hpp"
#include "decent/fabric.hpp"

// Per-platform certificate issuer enclave. Performs self-attestation once
// (refreshing on a fixed fraction of the certificate lifetime), then issues
// component certificates to same-platform enclaves over local-attestation
// channels.
namespace decent::server {

class SelfAttestFailed : public std::runtime_error {
 public:
  explicit SelfAttestFailed(const std::string& what)
      : std::runtime_error("self attestation: " + what) {}
};

class LaVerifyFailed : public std::runtime_error {
 public:
  explicit LaVerifyFailed(const std::string& what)
      : std::runtime_error("local attestation: " + what) {}
};

// Access to the attestation authority, either in-process or across the
// message fabric.
class IasFacade {
 public:
  virtual ~IasFacade() = default;
  virtual ias::IasReport verify_quote(const platform::Quote& quote,
                                      ByteView nonce) = 0;
  virtual ias::SigRl get_sigrl(platform::GroupId group) = 0;
};

class DirectIas final : public IasFacade {
 public:
  explicit DirectIas(ias::IasSim& sim) : sim_(sim) {}
  ias::IasReport verify_quote(const platform::Quote& quote,
                              ByteView nonce) override {
    return sim_.verify_quote(quote, nonce);
  }
  ias::SigRl get_sigrl(platform::GroupId group) override {
    return sim_.get_sigrl(group);
  }

 private:
  ias::IasSim& sim_;
};

// Dials the authority's fabric endpoint per request and waits for the
// (latency-modeled) response.
class RemoteIas final : public IasFacade {
 public:
  RemoteIas(fabric::Fabric& fabric, fabric::Address self_node,
            fabric::Address ias_addr, Micros timeout = 10 * kSecond)
      : fabric_(fabric),
        self_node_(std::move(self_node)),
        ias_addr_(std::move(ias_addr)),
        timeout_(timeout) {}

  ias::IasReport verify_quote(const platform::Quote& quote,
                              ByteView nonce) override;
  ias::SigRl get_sigrl(platform::GroupId group) override;

 private:
  fabric::Fabric& fabric_;
  fabric::Address self_node_;
  fabric::Address ias_addr_;
  Micros timeout_;
};

// Serves authority requests on one accepted conn until it closes; replies
// are delayed by the model's sampled response times.
void serve_ias_conn(ias::IasSim& sim, fabric::Fabric& fabric,
                    fabric::ConnPtr conn);
// Accept loop: spawns a task per conn. Returns the listener.
fabric::ListenerPtr spawn_ias_service(ias::IasSim& sim, fabric::Fabric& fabric,
                                      const fabric::Address& addr);

struct RefreshPolicy {
  Micros lifetime = 24ull * 3600 * kSecond;
  double refresh_fraction = 0.5;
};

class ServerContext {
 public:
  ServerContext(platform::EnclaveHandle enclave, Rng rng,
                RefreshPolicy policy = {});

  // Creates (or replaces) the SA certificate. Throws SelfAttestFailed when
  // the authority's verdict is not OK.
  void self_attest(IasFacade& ias);
  // Re-attests; on failure the server stops issuing and keeps the old
  // certificate, which expires naturally.
  void refresh(IasFacade& ias);

  bool serving() const;
  Micros refresh_due() const;  // absolute trusted time of next refresh

  std::shared_ptr<const certs::SaCertificate> sa_certificate() const;
  const crypto::Digest256& measurement() const {
    return enclave_.measurement();
  }
  const Bytes& public_key() const { return keypair_.public_key; }
  const RefreshPolicy& policy() const { return policy_; }

  // Serves one component's certificate request on `conn` (the component
  // drives component-side via decent::component::acquire_chain). Throws
  // LaVerifyFailed / tlv::MalformedEncoding; the peer sees an error frame.
  void la_issue(fabric::ConnPtr conn, Micros timeout = 5 * kSecond);

  // Accept loop plus periodic refresh, for simulated worlds.
  void spawn_service(fabric::Fabric& fabric, const fabric::Address& la_addr,
                     IasFacade* refresh_ias);

 private:
  platform::EnclaveHandle enclave_;
  crypto::SigningKeyPair keypair_;
  RefreshPolicy policy_;
  mutable std::mutex mu_;
  Rng rng_;
  std::shared_ptr<const certs::SaCertificate> sa_cert_;
  Micros attested_at_ = 0;
  bool serving_ = false;
};

}  // namespace decent::server
