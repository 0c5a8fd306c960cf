// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/ias.hpp"

#include "decent/tlv.hpp"

namespace decent::ias {

namespace {
constexpr std::string_view kReportDomain = "decent-ias-report-v1";
constexpr std::string_view kSigrlDomain = "decent-ias-sigrl-v1";
}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Ok:
      return "OK";
    case Verdict::GroupRevoked:
      return "GROUP_REVOKED";
    case Verdict::SignatureInvalid:
      return "SIGNATURE_INVALID";
  }
  return "UNKNOWN";
}

Bytes IasReport::signed_payload() const {
  Bytes payload = to_bytes(kReportDomain);
  append(payload, quote.encode());
  payload.push_back(static_cast<std::uint8_t>(verdict));
  append(payload, nonce);
  store_u64be(payload, timestamp);
  return payload;
}

Bytes IasReport::encode() const {
  tlv::Writer w;
  w.field(1, quote.encode());
  w.field_u8(2, static_cast<std::uint8_t>(verdict));
  w.field(3, nonce);
  w.field_u64(4, timestamp);
  w.field(5, signature);
  return w.take();
}

IasReport IasReport::decode(ByteView data) {
  tlv::Reader r(data);
  IasReport report;
  report.quote = platform::Quote::decode(r.field(1));
  std::uint8_t v = r.field_u8(2);
  if (v > static_cast<std::uint8_t>(Verdict::SignatureInvalid)) {
    throw tlv::MalformedEncoding("bad verdict value");
  }
  report.verdict = static_cast<Verdict>(v);
  ByteView nonce = r.field(3);
  if (nonce.size() != kNonceSize) {
    throw tlv::MalformedEncoding("nonce must be 16 bytes");
  }
  report.nonce.assign(nonce.begin(), nonce.end());
  report.timestamp = r.field_u64(4);
  ByteView sig = r.field(5);
  report.signature.assign(sig.begin(), sig.end());
  r.finish();
  return report;
}

Bytes SigRl::signed_payload() const {
  Bytes payload = to_bytes(kSigrlDomain);
  store_u64be(payload, group_id);
  for (auto p : revoked) store_u64be(payload, p);
  return payload;
}

Bytes SigRl::encode() const {
  tlv::Writer w;
  w.field_u64(1, group_id);
  Bytes ids;
  for (auto p : revoked) store_u64be(ids, p);
  w.field(2, ids);
  w.field(3, signature);
  return w.take();
}

SigRl SigRl::decode(ByteView data) {
  tlv::Reader r(data);
  SigRl rl;
  rl.group_id = r.field_u64(1);
  ByteView ids = r.field(2);
  if (ids.size() % 8 != 0) {
    throw tlv::MalformedEncoding("bad revocation id list");
  }
  for (std::size_t i = 0; i < ids.size(); i += 8) {
    rl.revoked.push_back(load_u64be(ids.subspan(i, 8)));
  }
  ByteView sig = r.field(3);
  rl.signature.assign(sig.begin(), sig.end());
  r.finish();
  return rl;
}

double LatencyModel::report_shape() const {
  return (report_mean_ms * report_mean_ms) / (report_sd_ms * report_sd_ms);
}
double LatencyModel::report_scale_ms() const {
  return (report_sd_ms * report_sd_ms) / report_mean_ms;
}
double LatencyModel::sigrl_shape() const {
  return (sigrl_mean_ms * sigrl_mean_ms) / (sigrl_sd_ms * sigrl_sd_ms);
}
double LatencyModel::sigrl_scale_ms() const {
  return (sigrl_sd_ms * sigrl_sd_ms) / sigrl_mean_ms;
}

IasSim::IasSim(Rng rng, ClockPtr clock, LatencyModel latency)
    : rng_(rng), clock_(std::move(clock)), latency_(latency) {
  Rng key_rng = rng_.fork("ias-authority-key");
  authority_ = crypto::SigningKeyPair::generate(key_rng);
}

void IasSim::register_group(platform::GroupId id, Bytes group_public_key) {
  std::lock_guard lock(mu_);
  group_keys_[id] = std::move(group_public_key);
}

void IasSim::register_platform(platform::PlatformId platform,
                               platform::GroupId group) {
  std::lock_guard lock(mu_);
  platform_groups_[platform] = group;
}

IasReport IasSim::verify_quote(const platform::Quote& quote, ByteView nonce) {
  std::lock_guard lock(mu_);
  reports_served_.fetch_add(1, std::memory_order_relaxed);
  if (replay_mode_ && replay_report_) {
    return *replay_report_;
  }
  if (nonce.size() != kNonceSize) {
    throw std::invalid_argument("ias nonce must be 16 bytes");
  }

  IasReport report;
  report.quote = quote;
  report.nonce.assign(nonce.begin(), nonce.end());
  report.timestamp = clock_->now();

  auto group_it = group_keys_.find(quote.group_id);
  if (group_it == group_keys_.end() ||
      !crypto::verify(group_it->second, quote.signed_payload(),
                      quote.group_signature)) {
    report.verdict = Verdict::SignatureInvalid;
  } else if (revoked_.count({quote.group_id, quote.platform_id}) > 0) {
    report.verdict = Verdict::GroupRevoked;
  } else {
    report.verdict = Verdict::Ok;
  }

  report.signature = crypto::sign(authority_.private_key,
                                  report.signed_payload());
  if (replay_mode_) {
    replay_report_ = report;
  }
  return report;
}

SigRl IasSim::get_sigrl(platform::GroupId group) {
  std::lock_guard lock(mu_);
  sigrls_served_.fetch_add(1, std::memory_order_relaxed);
  if (group_keys_.find(group) == group_keys_.end()) {
    throw UnknownGroup(group);
  }
  SigRl rl;
  rl.group_id = group;
  for (const auto& [gid, pid] : revoked_) {
    if (gid == group) rl.revoked.push_back(pid);
  }
  rl.signature = crypto::sign(authority_.private_key, rl.signed_payload());
  return rl;
}

void IasSim::revoke_platform(platform::PlatformId platform) {
  std::lock_guard lock(mu_);
  auto it = platform_groups_.find(platform);
  if (it == platform_groups_.end()) {
    throw std::invalid_argument("revoking unregistered platform");
  }
  revoked_.insert({it->second, platform});
}

bool IasSim::platform_revoked(platform::PlatformId platform) const {
  std::lock_guard lock(mu_);
  auto it = platform_groups_.find(platform);
  if (it == platform_groups_.end()) return false;
  return revoked_.count({it->second, platform}) > 0;
}

Micros IasSim::sample_report_delay() {
  std::lock_guard lock(mu_);
  double ms = rng_.gamma(latency_.report_shape(), latency_.report_scale_ms());
  return static_cast<Micros>(ms * 1000.0);
}

Micros IasSim::sample_sigrl_delay() {
  std::lock_guard lock(mu_);
  double ms = rng_.gamma(latency_.sigrl_shape(), latency_.sigrl_scale_ms());
  return static_cast<Micros>(ms * 1000.0);
}

void IasSim::set_replay_mode(bool on) {
  std::lock_guard lock(mu_);
  replay_mode_ = on;
  if (!on) replay_report_.reset();
}

}  // namespace decent::ias
