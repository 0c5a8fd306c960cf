// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/scenario.hpp"

#include "doctest.h"

using namespace decent;
using namespace decent::scenario;

#ifndef DECENT_SOURCE_DIR
#define DECENT_SOURCE_DIR "."
#endif

namespace {
std::string scenario_path(const std::string& name) {
  return std::string(DECENT_SOURCE_DIR) + "/scenarios/" + name;
}
}  // namespace

TEST_CASE("the scenario grammar parses into a full config") {
  auto config = parse_scenario(R"(
# comment
seed 9
latency_us 250
run_for_s 3.5
adversary tamper
stakeholders 4
threshold 3
platform P1 group G7
host H1 platform P1 malicious
blob thing
secret SEC 48
authlist L1
  entry server DecentServer
  entry thing SvcThing
end
authlist L2
  entry thing SvcThing nested L1
end
component C host H1 blob thing authlist L1 service SvcThing serve expect SvcOther expect_verifier SvcVer poll R1,R2 poll_interval_s 2 poll_timeout_s 0.5 max_missed 4
at 1.5 send C C SvcThing SEC via SvcVer
at 2 leak C
at 2.5 revoke R1 thing
at 3 ias_revoke P1
assert secrecy SEC
assert rejected C C AUTHLIST_MISMATCH
)");

  CHECK(config.seed == 9);
  CHECK(config.link_latency == 250);
  CHECK(config.run_for == from_seconds(3.5));
  CHECK(config.adversary == "tamper");
  CHECK(config.stakeholders == 4);
  CHECK(config.threshold == 3);
  REQUIRE(config.platforms.size() == 1);
  CHECK(config.platforms[0].group == "G7");
  REQUIRE(config.hosts.size() == 1);
  CHECK_FALSE(config.hosts[0].honest);
  REQUIRE(config.secrets.size() == 1);
  CHECK(config.secrets[0].second == 48);
  REQUIRE(config.authlists.size() == 2);
  CHECK(config.authlists[1].entries[0].nested_list == "L1");
  REQUIRE(config.components.size() == 1);
  const auto& c = config.components[0];
  CHECK(c.serve);
  CHECK(c.expect_service == "SvcOther");
  CHECK(c.expect_verifier_service == "SvcVer");
  CHECK(c.revokers.endpoints.size() == 2);
  CHECK(c.revokers.poll_interval == 2 * kSecond);
  CHECK(c.revokers.poll_timeout == kSecond / 2);
  CHECK(c.revokers.max_missed == 4);
  REQUIRE(config.actions.size() == 4);
  CHECK(config.actions[0].verifier_service == "SvcVer");
  CHECK(config.actions[3].kind ==
        sim::ScenarioConfig::Action::Kind::IasRevoke);
  CHECK(config.assertions.size() == 2);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_AS(parse_scenario("platform\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario("bogus directive\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario("authlist X\n  entry a b\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario("at 1 warp A\n"), ParseError);
}

TEST_CASE("the bench grammar covers all plan kinds") {
  auto plan = parse_bench(R"(
kind latency
nodes 4
clients 3
sessions 10,20
targets 50,100
node_counts 3,4
session_length 25
modes decent-ra,plain
time_scale 0.05
)");
  CHECK(plan.kind == BenchPlan::Kind::LatencyCurve);
  CHECK(plan.workload.n_nodes == 4);
  CHECK(plan.workload.requests_per_session == std::vector<int>{10, 20});
  CHECK(plan.latency_targets == std::vector<double>{50, 100});
  CHECK(plan.node_counts == std::vector<int>{3, 4});
  CHECK(plan.fixed_session_length == 25);
  REQUIRE(plan.modes.size() == 2);
  CHECK(plan.modes[1] == bench::ChannelMode::PlainChannel);
  CHECK(plan.workload.time_scale == doctest::Approx(0.05));

  CHECK_THROWS_AS(parse_bench("kind nonsense\n"), ParseError);
  CHECK_THROWS_AS(parse_bench("modes warp\n"), ParseError);
}

TEST_CASE("shipped scenario files run and their assertions hold") {
  for (const char* name :
       {"mutual_circular.scn", "transitive_trust.scn"}) {
    CAPTURE(name);
    auto config = load_scenario(scenario_path(name));
    sim::SimWorld world(std::move(config));
    world.run();
    CHECK(world.check_assertions());
  }
}
