// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/ias.hpp"

#include <cmath>

#include "doctest.h"

using namespace decent;
using namespace decent::ias;

namespace {

struct Fixture {
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(0);
  Rng rng{23};
  std::shared_ptr<platform::AttestationGroup> group =
      platform::AttestationGroup::create(7, rng);
  IasSim ias{Rng(99), clock};
  platform::PlatformPtr plat;
  platform::EnclaveHandle enclave;

  Fixture() {
    ias.register_group(group->id, group->key.public_key);
    plat = platform::Platform::create(1, group, clock, rng);
    ias.register_platform(plat->id(), plat->group_id());
    enclave = plat->load_enclave(
        platform::EnclaveCode::from_blob(rng.bytes(48)), "host");
  }
};

}  // namespace

TEST_CASE("honest quotes get OK verdicts with valid signatures") {
  Fixture f;
  Bytes nonce = f.rng.bytes(kNonceSize);
  auto quote = f.enclave.create_quote(f.rng.bytes(32));
  IasReport report = f.ias.verify_quote(quote, nonce);
  CHECK(report.verdict == Verdict::Ok);
  CHECK(report.nonce == nonce);  // echo, for replay detection
  CHECK(crypto::verify(f.ias.authority_public_key(), report.signed_payload(),
                       report.signature));
  CHECK(report.quote.measurement == quote.measurement);

  IasReport decoded = IasReport::decode(report.encode());
  CHECK(decoded.encode() == report.encode());
}

TEST_CASE("tampered quotes are flagged as signature-invalid") {
  Fixture f;
  auto quote = f.enclave.create_quote(f.rng.bytes(32));
  quote.measurement.bytes[0] ^= 0x01;
  IasReport report = f.ias.verify_quote(quote, f.rng.bytes(kNonceSize));
  CHECK(report.verdict == Verdict::SignatureInvalid);
  // Verdicts are still authority-signed, whatever they say.
  CHECK(crypto::verify(f.ias.authority_public_key(), report.signed_payload(),
                       report.signature));

  auto quote2 = f.enclave.create_quote(f.rng.bytes(32));
  quote2.report_data[5] ^= 0x01;
  CHECK(f.ias.verify_quote(quote2, f.rng.bytes(kNonceSize)).verdict ==
        Verdict::SignatureInvalid);

  platform::Quote unknown_group = f.enclave.create_quote(f.rng.bytes(32));
  unknown_group.group_id = 4242;
  CHECK(f.ias.verify_quote(unknown_group, f.rng.bytes(kNonceSize)).verdict ==
        Verdict::SignatureInvalid);
}

TEST_CASE("platform revocation flips the verdict for that platform only") {
  Fixture f;
  auto other_group = platform::AttestationGroup::create(8, f.rng);
  f.ias.register_group(other_group->id, other_group->key.public_key);
  auto other_plat = platform::Platform::create(2, other_group, f.clock, f.rng);
  f.ias.register_platform(other_plat->id(), other_plat->group_id());
  auto other_enclave = other_plat->load_enclave(
      platform::EnclaveCode::from_blob(f.rng.bytes(48)), "host");

  f.ias.revoke_platform(f.plat->id());
  CHECK(f.ias.platform_revoked(f.plat->id()));

  auto quote = f.enclave.create_quote(f.rng.bytes(32));
  CHECK(f.ias.verify_quote(quote, f.rng.bytes(kNonceSize)).verdict ==
        Verdict::GroupRevoked);

  auto other_quote = other_enclave.create_quote(f.rng.bytes(32));
  CHECK(f.ias.verify_quote(other_quote, f.rng.bytes(kNonceSize)).verdict ==
        Verdict::Ok);
}

TEST_CASE("revocation list grows monotonically and is signed") {
  Fixture f;
  SigRl fresh = f.ias.get_sigrl(f.group->id);
  CHECK(fresh.revoked.empty());
  CHECK(crypto::verify(f.ias.authority_public_key(), fresh.signed_payload(),
                       fresh.signature));

  f.ias.revoke_platform(f.plat->id());
  SigRl after = f.ias.get_sigrl(f.group->id);
  REQUIRE(after.revoked.size() == 1);
  CHECK(after.revoked[0] == f.plat->id());

  CHECK_THROWS_AS(f.ias.get_sigrl(999), UnknownGroup);

  SigRl decoded = SigRl::decode(after.encode());
  CHECK(decoded.encode() == after.encode());
}

TEST_CASE("latency model recovers gamma parameters by moments") {
  LatencyModel model;
  CHECK(model.report_shape() == doctest::Approx(13.2704).epsilon(0.001));
  CHECK(model.report_scale_ms() == doctest::Approx(19.2157).epsilon(0.001));
  CHECK(model.sigrl_shape() == doctest::Approx(2.6406).epsilon(0.001));
  CHECK(model.sigrl_scale_ms() == doctest::Approx(14.7692).epsilon(0.001));
}

TEST_CASE("sampled delays match the modeled means") {
  Fixture f;
  const int n = 10'000;
  double sigrl_sum = 0;
  double report_sum = 0;
  for (int i = 0; i < n; ++i) {
    Micros d = f.ias.sample_sigrl_delay();
    CHECK(d >= 0);
    sigrl_sum += to_millis(d);
    report_sum += to_millis(f.ias.sample_report_delay());
  }
  double sigrl_mean = sigrl_sum / n;
  double report_mean = report_sum / n;
  CHECK(std::abs(sigrl_mean - 39.0) / 39.0 < 0.05);
  CHECK(std::abs(report_mean - 255.0) / 255.0 < 0.05);
}

TEST_CASE("replay mode repeats the first response verbatim") {
  Fixture f;
  f.ias.set_replay_mode(true);
  auto quote = f.enclave.create_quote(f.rng.bytes(32));
  IasReport first = f.ias.verify_quote(quote, f.rng.bytes(kNonceSize));
  auto quote2 = f.enclave.create_quote(f.rng.bytes(32));
  IasReport second = f.ias.verify_quote(quote2, f.rng.bytes(kNonceSize));
  CHECK(first.encode() == second.encode());  // nonce ignored, as in the
                                             // benchmark methodology
  f.ias.set_replay_mode(false);
  IasReport third = f.ias.verify_quote(quote2, f.rng.bytes(kNonceSize));
  CHECK(third.encode() != second.encode());
}
