// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/platform.hpp"

#include <set>

#include "doctest.h"

using namespace decent;
using namespace decent::platform;

namespace {

struct Fixture {
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(0);
  Rng rng{17};
  std::shared_ptr<AttestationGroup> group = AttestationGroup::create(1, rng);

  PlatformPtr make_platform(PlatformId id) {
    return Platform::create(id, group, clock, rng);
  }
};

}  // namespace

TEST_CASE("loading measures the code") {
  Fixture f;
  auto plat = f.make_platform(1);
  Bytes blob = f.rng.bytes(80);
  auto code = EnclaveCode::from_blob(blob);
  auto e1 = plat->load_enclave(code, "hostA");
  auto e2 = plat->load_enclave(code, "hostB");
  CHECK(e1.measurement() == e2.measurement());
  CHECK(e1.measurement() == crypto::hash(blob));

  Bytes other = blob;
  other[0] ^= 0x01;
  auto e3 = plat->load_enclave(EnclaveCode::from_blob(other), "hostA");
  CHECK(e3.measurement() != e1.measurement());
}

TEST_CASE("local reports verify only on the issuing platform") {
  Fixture f;
  auto p1 = f.make_platform(1);
  auto p2 = f.make_platform(2);
  auto code = EnclaveCode::from_blob(f.rng.bytes(40));
  auto e1 = p1->load_enclave(code, "h1");
  auto e1b = p1->load_enclave(EnclaveCode::from_blob(f.rng.bytes(40)), "h1");
  auto e2 = p2->load_enclave(code, "h2");

  Bytes data = f.rng.bytes(40);
  LocalReport report = e1.create_local_report(data);
  CHECK(report.measurement == e1.measurement());
  CHECK(e1.verify_local_report(report));
  CHECK(e1b.verify_local_report(report));     // same platform, other enclave
  CHECK_FALSE(e2.verify_local_report(report));  // different platform

  // Host tampering with any field breaks the binding.
  LocalReport tampered = report;
  tampered.report_data[0] ^= 0x01;
  CHECK_FALSE(e1.verify_local_report(tampered));
  tampered = report;
  tampered.measurement.bytes[4] ^= 0x01;
  CHECK_FALSE(e1.verify_local_report(tampered));

  CHECK_THROWS_AS(e1.create_local_report(Bytes(65, 0)), std::invalid_argument);
}

TEST_CASE("quotes carry the measurement and verify under the group key") {
  Fixture f;
  auto p1 = f.make_platform(1);
  auto p2 = f.make_platform(2);  // same group
  Bytes blob = f.rng.bytes(60);
  auto e1 = p1->load_enclave(EnclaveCode::from_blob(blob), "h1");
  auto e2 = p2->load_enclave(EnclaveCode::from_blob(blob), "h2");

  Bytes data = f.rng.bytes(32);
  Quote q1 = e1.create_quote(data);
  Quote q2 = e2.create_quote(data);
  CHECK(q1.measurement == crypto::hash(blob));
  CHECK(q1.group_id == q2.group_id);
  CHECK(crypto::verify(f.group->key.public_key, q1.signed_payload(),
                       q1.group_signature));
  CHECK(crypto::verify(f.group->key.public_key, q2.signed_payload(),
                       q2.group_signature));

  Quote altered = q1;
  altered.report_data[0] ^= 0x01;
  CHECK_FALSE(crypto::verify(f.group->key.public_key, altered.signed_payload(),
                             altered.group_signature));
}

TEST_CASE("seal keys bind platform and measurement and stay stable") {
  Fixture f;
  auto p1 = f.make_platform(1);
  auto p2 = f.make_platform(2);
  Bytes blob = f.rng.bytes(50);
  auto code = EnclaveCode::from_blob(blob);
  Bytes label = to_bytes(std::string_view("disk"));

  auto first = p1->load_enclave(code, "h");
  auto second = p1->load_enclave(code, "h");  // restart
  CHECK(first.derive_seal_key(SealPolicy::ByMeasurement, label) ==
        second.derive_seal_key(SealPolicy::ByMeasurement, label));

  auto elsewhere = p2->load_enclave(code, "h");
  CHECK(first.derive_seal_key(SealPolicy::ByMeasurement, label) !=
        elsewhere.derive_seal_key(SealPolicy::ByMeasurement, label));

  auto other_code = EnclaveCode::from_blob(f.rng.bytes(50));
  auto other = p1->load_enclave(other_code, "h");
  CHECK(first.derive_seal_key(SealPolicy::ByMeasurement, label) !=
        other.derive_seal_key(SealPolicy::ByMeasurement, label));

  CHECK(first.derive_seal_key(SealPolicy::ByMeasurement, label) !=
        first.derive_seal_key(SealPolicy::BySigner, label));

  // Injective over measurements at test scale.
  std::set<Bytes> keys;
  for (int i = 0; i < 100; ++i) {
    auto e = p1->load_enclave(EnclaveCode::from_blob(f.rng.bytes(32)), "h");
    auto key = e.derive_seal_key(SealPolicy::ByMeasurement, label);
    keys.insert(Bytes(key.view().begin(), key.view().end()));
  }
  CHECK(keys.size() == 100);
}

TEST_CASE("platform secrets never appear in serialized artifacts") {
  Fixture f;
  Bytes report_key = f.rng.bytes(32);
  Bytes seal_secret = f.rng.bytes(32);
  auto plat = Platform::create_with_secrets(9, f.group, f.clock, report_key,
                                            seal_secret);
  auto enclave =
      plat->load_enclave(EnclaveCode::from_blob(f.rng.bytes(64)), "h");

  std::vector<Bytes> artifacts;
  artifacts.push_back(enclave.create_local_report(f.rng.bytes(64)).encode());
  artifacts.push_back(enclave.create_quote(f.rng.bytes(64)).encode());

  for (const auto& artifact : artifacts) {
    CHECK_FALSE(contains_bytes(artifact, report_key));
    CHECK_FALSE(contains_bytes(artifact, seal_secret));
    CHECK_FALSE(contains_bytes(artifact, f.group->key.private_key));
  }
}

TEST_CASE("trusted clock is monotonic and follows simulated time") {
  Fixture f;
  auto plat = f.make_platform(1);
  auto enclave =
      plat->load_enclave(EnclaveCode::from_blob(f.rng.bytes(16)), "h");
  Micros t1 = enclave.trusted_now();
  Micros t2 = enclave.trusted_now();
  CHECK(t2 >= t1);
  f.clock->advance_by(5 * kSecond);
  CHECK(enclave.trusted_now() - t1 == 5 * kSecond);
}

TEST_CASE("report and quote encodings round-trip") {
  Fixture f;
  auto plat = f.make_platform(1);
  auto enclave =
      plat->load_enclave(EnclaveCode::from_blob(f.rng.bytes(16)), "h");
  LocalReport report = enclave.create_local_report(f.rng.bytes(64));
  LocalReport report2 = LocalReport::decode(report.encode());
  CHECK(report2.encode() == report.encode());
  CHECK(enclave.verify_local_report(report2));

  Quote quote = enclave.create_quote(f.rng.bytes(64));
  Quote quote2 = Quote::decode(quote.encode());
  CHECK(quote2.encode() == quote.encode());
}
