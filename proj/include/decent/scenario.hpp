// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "decent/bench.hpp"
#include "decent/sim.hpp"

// Declarative text format shared by scenario and benchmark runs. Line
// oriented; '#' starts a comment. See scenarios/ for examples.
namespace decent::scenario {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what) {}
};

sim::ScenarioConfig parse_scenario(std::string_view text);
sim::ScenarioConfig load_scenario(const std::string& path);

struct BenchPlan {
  enum class Kind { Sweep, LatencyCurve, NodeScaling };
  Kind kind = Kind::Sweep;
  bench::WorkloadConfig workload;
  std::vector<bench::ChannelMode> modes{bench::ChannelMode::DecentRA,
                                        bench::ChannelMode::RaOnly,
                                        bench::ChannelMode::PlainChannel};
  std::vector<double> latency_targets;  // latency-curve runs
  std::vector<int> node_counts{3, 4, 5, 6};
  int fixed_session_length = 50;
};

BenchPlan parse_bench(std::string_view text);
BenchPlan load_bench(const std::string& path);

}  // namespace decent::scenario
