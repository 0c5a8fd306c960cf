// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "decent/platform.hpp"

// Simulated attestation authority: verifies quotes against registered group
// keys, signs attestation reports with a well-known key, tracks platform
// revocation, and models the authority's response latency.
namespace decent::ias {

enum class Verdict : std::uint8_t {
  Ok = 0,
  GroupRevoked = 1,
  SignatureInvalid = 2,
};

const char* to_string(Verdict v);

inline constexpr std::size_t kNonceSize = 16;

struct IasReport {
  platform::Quote quote;
  Verdict verdict = Verdict::SignatureInvalid;
  Bytes nonce;  // echo of the request nonce, 16 bytes
  Micros timestamp = 0;
  Bytes signature;  // authority signature over all prior fields

  Bytes signed_payload() const;
  Bytes encode() const;
  static IasReport decode(ByteView data);
};

struct SigRl {
  platform::GroupId group_id = 0;
  std::vector<platform::PlatformId> revoked;  // monotonically growing
  Bytes signature;

  Bytes signed_payload() const;
  Bytes encode() const;
  static SigRl decode(ByteView data);
};

// Response-time model: gamma distributions with shape/scale recovered from
// the measured mean and standard deviation by the method of moments.
struct LatencyModel {
  double report_mean_ms = 255.0;
  double report_sd_ms = 70.0;
  double sigrl_mean_ms = 39.0;
  double sigrl_sd_ms = 24.0;

  double report_shape() const;
  double report_scale_ms() const;
  double sigrl_shape() const;
  double sigrl_scale_ms() const;
};

class UnknownGroup : public std::runtime_error {
 public:
  explicit UnknownGroup(platform::GroupId id)
      : std::runtime_error("unknown attestation group " + std::to_string(id)) {}
};

class IasSim {
 public:
  IasSim(Rng rng, ClockPtr clock, LatencyModel latency = {});

  const Bytes& authority_public_key() const { return authority_.public_key; }

  void register_group(platform::GroupId id, Bytes group_public_key);
  void register_platform(platform::PlatformId platform,
                         platform::GroupId group);

  // Pure verdict computation; callers add the sampled delay themselves.
  IasReport verify_quote(const platform::Quote& quote, ByteView nonce);
  SigRl get_sigrl(platform::GroupId group);  // throws UnknownGroup

  void revoke_platform(platform::PlatformId platform);
  bool platform_revoked(platform::PlatformId platform) const;

  Micros sample_report_delay();
  Micros sample_sigrl_delay();

  // Benchmark methodology switch: when enabled, the first report computed is
  // cached and replayed verbatim for every later request (nonce ignored).
  void set_replay_mode(bool on);
  bool replay_mode() const { return replay_mode_; }

  std::uint64_t reports_served() const { return reports_served_.load(); }
  std::uint64_t sigrls_served() const { return sigrls_served_.load(); }

  const LatencyModel& latency_model() const { return latency_; }

 private:
  mutable std::mutex mu_;
  Rng rng_;
  ClockPtr clock_;
  LatencyModel latency_;
  crypto::SigningKeyPair authority_;
  std::map<platform::GroupId, Bytes> group_keys_;
  std::map<platform::PlatformId, platform::GroupId> platform_groups_;
  std::set<std::pair<platform::GroupId, platform::PlatformId>> revoked_;
  bool replay_mode_ = false;
  std::optional<IasReport> replay_report_;
  std::atomic<std::uint64_t> reports_served_{0};
  std::atomic<std::uint64_t> sigrls_served_{0};
};

}  // namespace decent::ias
