// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <memory>
#include <string>

#include "decent/crypto.hpp"
#include "decent/time.hpp"

// Simulated enclave platform: code measurement at load, local-attestation
// reports, remote-attestation quotes, seal-key derivation, and a trusted
// monotonic clock. Platform secrets (report key, group signing key, root
// seal secret) never leave this module except through derived artifacts.
namespace decent::platform {

using PlatformId = std::uint64_t;
using GroupId = std::uint64_t;

inline constexpr std::size_t kReportDataSize = 64;

struct EnclaveCode {
  Bytes blob;
  crypto::Digest256 measurement;       // hash(blob)
  crypto::Digest256 signer;            // enclave author identity; zero unless set

  static EnclaveCode from_blob(Bytes blob,
                               crypto::Digest256 signer = crypto::Digest256{});
};

struct LocalReport {
  crypto::Digest256 measurement;
  std::array<std::uint8_t, kReportDataSize> report_data{};
  Bytes mac;  // keyed by the platform's private report key

  Bytes encode() const;
  static LocalReport decode(ByteView data);
};

struct Quote {
  crypto::Digest256 measurement;
  std::array<std::uint8_t, kReportDataSize> report_data{};
  GroupId group_id = 0;
  // Models the linkability available to the attestation authority: the
  // authority can tell which group member signed, third parties rely only
  // on the group signature.
  PlatformId platform_id = 0;
  Bytes group_signature;

  Bytes signed_payload() const;
  Bytes encode() const;
  static Quote decode(ByteView data);
};

// Signing identity shared by every platform in one attestation group.
struct AttestationGroup {
  GroupId id;
  crypto::SigningKeyPair key;

  static std::shared_ptr<AttestationGroup> create(GroupId id, Rng& rng);
};

enum class SealPolicy { ByMeasurement, BySigner };

class Platform;
using PlatformPtr = std::shared_ptr<Platform>;

// Reference to a loaded enclave. The host that loaded it can reach enclave
// state only through the operations declared here.
class EnclaveHandle {
 public:
  EnclaveHandle() = default;

  const crypto::Digest256& measurement() const { return measurement_; }
  const crypto::Digest256& signer() const { return signer_; }
  const std::string& host_id() const { return host_id_; }
  PlatformId platform_id() const;
  GroupId group_id() const;

  // report_data up to 64 bytes, zero padded on the right.
  LocalReport create_local_report(ByteView report_data) const;
  // True only for unmodified reports created on the same platform.
  bool verify_local_report(const LocalReport& report) const;

  Quote create_quote(ByteView report_data) const;

  // Deterministic per (platform, measurement-or-signer, label); stable
  // across reloads of the same code on the same platform.
  crypto::AeadKey derive_seal_key(SealPolicy policy, ByteView label) const;

  Micros trusted_now() const;

  explicit operator bool() const { return platform_ != nullptr; }

 private:
  friend class Platform;
  std::shared_ptr<const Platform> platform_;
  crypto::Digest256 measurement_;
  crypto::Digest256 signer_;
  std::string host_id_;
};

class Platform : public std::enable_shared_from_this<Platform> {
 public:
  // Secrets drawn from `rng`.
  static PlatformPtr create(PlatformId id,
                            std::shared_ptr<const AttestationGroup> group,
                            ClockPtr clock, Rng& rng);
  // Explicit secrets, for tests that audit non-leakage.
  static PlatformPtr create_with_secrets(
      PlatformId id, std::shared_ptr<const AttestationGroup> group,
      ClockPtr clock, Bytes report_key, Bytes root_seal_secret);

  EnclaveHandle load_enclave(const EnclaveCode& code,
                             std::string host_id) const;

  PlatformId id() const { return id_; }
  GroupId group_id() const { return group_->id; }
  const Clock& clock() const { return *clock_; }

 private:
  friend class EnclaveHandle;
  Platform(PlatformId id, std::shared_ptr<const AttestationGroup> group,
           ClockPtr clock, Bytes report_key, Bytes root_seal_secret);

  PlatformId id_;
  std::shared_ptr<const AttestationGroup> group_;
  ClockPtr clock_;
  Bytes report_key_;
  Bytes root_seal_secret_;
};

}  // namespace decent::platform
