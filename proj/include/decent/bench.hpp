// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <iosfwd>

#include "decent/dht.hpp"

// Benchmark harness: read-mostly key-value load over the hash table under
// three channel modes, sweeping the number of requests per session.
//
//   DecentRA      certificate-chain handshake at session start, ticket
//                 resumption afterwards; no authority traffic in steady state
//   RaOnly        fresh attestation round-trip (authority latency model) at
//                 session start, then an attestation-derived channel with
//                 ticket-like resumption
//   PlainChannel  unauthenticated key agreement, no verification at all
//
// Runs on the real-time fabric with modeled delays scaled by a configurable
// factor; numbers are reported as ratios and orderings, not absolutes.
namespace decent::bench {

enum class ChannelMode { DecentRA, RaOnly, PlainChannel };

const char* to_string(ChannelMode mode);
std::optional<ChannelMode> mode_from_string(std::string_view name);

struct WorkloadConfig {
  double read_fraction = 0.95;
  int records_per_node = 3000;
  int n_nodes = 6;
  double warmup_s = 60.0;
  double measure_s = 60.0;
  int repeats = 3;  // median reported
  std::vector<int> requests_per_session = {10, 50, 100, 200, 400, 800, 1600};

  int clients = 6;
  int value_size = 256;
  double time_scale = 0.1;     // modeled delays multiplied by this
  Micros link_latency = 100;   // one-way, before scaling
  std::uint64_t seed = 1;
  int client_workers_per_node = 2;
  int peer_workers_per_node = 2;
};

struct MetricsRow {
  std::string mode;
  int requests_per_session = 0;
  int n_nodes = 0;
  double target_throughput = 0;  // latency-curve runs only
  double throughput_rps = 0;
  double latency_mean_ms = 0;
  double latency_p50_ms = 0;
  double latency_p95_ms = 0;
  std::uint64_t handshakes = 0;
  std::uint64_t resumptions = 0;
  std::uint64_t ias_calls = 0;
  bool saturated = false;
};

std::string csv_header();
std::string to_csv(const MetricsRow& row);

// One live ring plus its clients; reused across sweep points.
class BenchWorld {
 public:
  BenchWorld(const WorkloadConfig& config, ChannelMode mode);
  ~BenchWorld();

  BenchWorld(const BenchWorld&) = delete;
  BenchWorld& operator=(const BenchWorld&) = delete;

  // Closed loop: every client issues requests back to back.
  MetricsRow run_point(int requests_per_session);
  // Open loop at a fixed aggregate request rate.
  MetricsRow run_point_at_rate(int requests_per_session, double target_rps);

  ChannelMode mode() const { return mode_; }

 private:
  struct Impl;
  WorkloadConfig config_;
  ChannelMode mode_;
  std::unique_ptr<Impl> impl_;
};

// Sweep requests-per-session for one mode; median over config.repeats.
std::vector<MetricsRow> run_sweep(const WorkloadConfig& config,
                                  ChannelMode mode, std::ostream* csv);

std::vector<MetricsRow> run_latency_curve(const WorkloadConfig& config,
                                          ChannelMode mode,
                                          const std::vector<double>& targets,
                                          int requests_per_session,
                                          std::ostream* csv);

std::vector<MetricsRow> run_node_scaling(const WorkloadConfig& config,
                                         const std::vector<ChannelMode>& modes,
                                         const std::vector<int>& node_counts,
                                         int requests_per_session,
                                         std::ostream* csv);

}  // namespace decent::bench
