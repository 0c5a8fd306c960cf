// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/platform.hpp"

#include <stdexcept>

#include "decent/tlv.hpp"

namespace decent::platform {

namespace {

constexpr std::string_view kQuoteDomain = "decent-quote-v1";
constexpr std::string_view kLaReportDomain = "decent-la-report-v1";
constexpr std::string_view kSealByMeasurement = "seal-by-measurement";
constexpr std::string_view kSealBySigner = "seal-by-signer";

std::array<std::uint8_t, kReportDataSize> pad_report_data(ByteView data) {
  if (data.size() > kReportDataSize) {
    throw std::invalid_argument("report data exceeds 64 bytes");
  }
  std::array<std::uint8_t, kReportDataSize> out{};
  std::copy(data.begin(), data.end(), out.begin());
  return out;
}

Bytes la_mac_input(const LocalReport& report) {
  Bytes in = to_bytes(kLaReportDomain);
  append(in, report.measurement.view());
  append(in, ByteView(report.report_data.data(), report.report_data.size()));
  return in;
}

}  // namespace

EnclaveCode EnclaveCode::from_blob(Bytes blob, crypto::Digest256 signer) {
  EnclaveCode code;
  code.measurement = crypto::hash(blob);
  code.blob = std::move(blob);
  code.signer = signer;
  return code;
}

Bytes LocalReport::encode() const {
  tlv::Writer w;
  w.field(1, measurement.view());
  w.field(2, ByteView(report_data.data(), report_data.size()));
  w.field(3, mac);
  return w.take();
}

LocalReport LocalReport::decode(ByteView data) {
  tlv::Reader r(data);
  LocalReport report;
  report.measurement = crypto::Digest256::from_bytes(r.field(1));
  ByteView rd = r.field(2);
  if (rd.size() != kReportDataSize) {
    throw tlv::MalformedEncoding("report data must be 64 bytes");
  }
  std::copy(rd.begin(), rd.end(), report.report_data.begin());
  ByteView mac = r.field(3);
  report.mac.assign(mac.begin(), mac.end());
  r.finish();
  return report;
}

Bytes Quote::signed_payload() const {
  Bytes payload = to_bytes(kQuoteDomain);
  append(payload, measurement.view());
  append(payload, ByteView(report_data.data(), report_data.size()));
  store_u64be(payload, group_id);
  store_u64be(payload, platform_id);
  return payload;
}

Bytes Quote::encode() const {
  tlv::Writer w;
  w.field(1, measurement.view());
  w.field(2, ByteView(report_data.data(), report_data.size()));
  w.field_u64(3, group_id);
  w.field_u64(4, platform_id);
  w.field(5, group_signature);
  return w.take();
}

Quote Quote::decode(ByteView data) {
  tlv::Reader r(data);
  Quote q;
  q.measurement = crypto::Digest256::from_bytes(r.field(1));
  ByteView rd = r.field(2);
  if (rd.size() != kReportDataSize) {
    throw tlv::MalformedEncoding("report data must be 64 bytes");
  }
  std::copy(rd.begin(), rd.end(), q.report_data.begin());
  q.group_id = r.field_u64(3);
  q.platform_id = r.field_u64(4);
  ByteView sig = r.field(5);
  q.group_signature.assign(sig.begin(), sig.end());
  r.finish();
  return q;
}

std::shared_ptr<AttestationGroup> AttestationGroup::create(GroupId id,
                                                           Rng& rng) {
  auto group = std::make_shared<AttestationGroup>();
  group->id = id;
  group->key = crypto::SigningKeyPair::generate(rng);
  return group;
}

Platform::Platform(PlatformId id,
                   std::shared_ptr<const AttestationGroup> group,
                   ClockPtr clock, Bytes report_key, Bytes root_seal_secret)
    : id_(id),
      group_(std::move(group)),
      clock_(std::move(clock)),
      report_key_(std::move(report_key)),
      root_seal_secret_(std::move(root_seal_secret)) {
  if (!group_ || !clock_) {
    throw std::invalid_argument("platform requires a group and a clock");
  }
  if (report_key_.size() != 32 || root_seal_secret_.size() != 32) {
    throw std::invalid_argument("platform secrets must be 32 bytes");
  }
}

PlatformPtr Platform::create(PlatformId id,
                             std::shared_ptr<const AttestationGroup> group,
                             ClockPtr clock, Rng& rng) {
  return create_with_secrets(id, std::move(group), std::move(clock),
                             rng.bytes(32), rng.bytes(32));
}

PlatformPtr Platform::create_with_secrets(
    PlatformId id, std::shared_ptr<const AttestationGroup> group,
    ClockPtr clock, Bytes report_key, Bytes root_seal_secret) {
  return PlatformPtr(new Platform(id, std::move(group), std::move(clock),
                                  std::move(report_key),
                                  std::move(root_seal_secret)));
}

EnclaveHandle Platform::load_enclave(const EnclaveCode& code,
                                     std::string host_id) const {
  EnclaveHandle handle;
  handle.platform_ = shared_from_this();
  handle.measurement_ = crypto::hash(code.blob);
  handle.signer_ = code.signer;
  handle.host_id_ = std::move(host_id);
  return handle;
}

PlatformId EnclaveHandle::platform_id() const { return platform_->id_; }

GroupId EnclaveHandle::group_id() const { return platform_->group_->id; }

LocalReport EnclaveHandle::create_local_report(ByteView report_data) const {
  LocalReport report;
  report.measurement = measurement_;
  report.report_data = pad_report_data(report_data);
  report.mac = crypto::hmac(platform_->report_key_, la_mac_input(report));
  return report;
}

bool EnclaveHandle::verify_local_report(const LocalReport& report) const {
  return report.mac == crypto::hmac(platform_->report_key_,
                                    la_mac_input(report));
}

Quote EnclaveHandle::create_quote(ByteView report_data) const {
  Quote q;
  q.measurement = measurement_;
  q.report_data = pad_report_data(report_data);
  q.group_id = platform_->group_->id;
  q.platform_id = platform_->id_;
  q.group_signature = crypto::sign(platform_->group_->key.private_key,
                                   q.signed_payload());
  return q;
}

crypto::AeadKey EnclaveHandle::derive_seal_key(SealPolicy policy,
                                               ByteView label) const {
  std::string_view tag = policy == SealPolicy::ByMeasurement
                             ? kSealByMeasurement
                             : kSealBySigner;
  const crypto::Digest256& identity =
      policy == SealPolicy::ByMeasurement ? measurement_ : signer_;
  Bytes info(identity.view().begin(), identity.view().end());
  append(info, label);
  Bytes key = crypto::hkdf(platform_->root_seal_secret_, to_bytes(tag), info,
                           crypto::kAeadKeySize);
  return crypto::AeadKey::from_bytes(key);
}

Micros EnclaveHandle::trusted_now() const { return platform_->clock_->now(); }

}  // namespace decent::platform
