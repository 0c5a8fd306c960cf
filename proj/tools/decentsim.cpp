// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "decent/scenario.hpp"
#include "decent/tlv.hpp"

namespace {

using namespace decent;

int cmd_scenario_run(const std::string& path, std::optional<std::uint64_t> seed,
                     bool check) {
  sim::ScenarioConfig config = scenario::load_scenario(path);
  if (seed) config.seed = *seed;
  sim::SimWorld world(std::move(config));
  sim::EventLog& log = world.run();
  std::cout << log.serialize();
  if (!check) return 0;
  if (world.check_assertions()) {
    std::cout << "all assertions hold\n";
    return 0;
  }
  for (const auto& failure : world.assertion_failures()) {
    std::cerr << "assertion failed: " << failure << '\n';
  }
  return 1;
}

int cmd_bench(const std::string& path, const std::string& mode_filter,
              const std::string& out_path) {
  scenario::BenchPlan plan = scenario::load_bench(path);
  if (!mode_filter.empty()) {
    auto mode = bench::mode_from_string(mode_filter);
    if (!mode) {
      std::cerr << "unknown mode: " << mode_filter << '\n';
      return 2;
    }
    plan.modes = {*mode};
  }

  std::ofstream file;
  std::ostream* csv = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "cannot open " << out_path << '\n';
      return 2;
    }
    csv = &file;
  }
  *csv << bench::csv_header() << '\n';

  switch (plan.kind) {
    case scenario::BenchPlan::Kind::Sweep:
      for (auto mode : plan.modes) {
        bench::run_sweep(plan.workload, mode, csv);
      }
      break;
    case scenario::BenchPlan::Kind::LatencyCurve:
      for (auto mode : plan.modes) {
        bench::run_latency_curve(plan.workload, mode, plan.latency_targets,
                                 plan.fixed_session_length, csv);
      }
      break;
    case scenario::BenchPlan::Kind::NodeScaling:
      bench::run_node_scaling(plan.workload, plan.modes, plan.node_counts,
                              plan.fixed_session_length, csv);
      break;
  }
  return 0;
}

Bytes read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in),
               std::istreambuf_iterator<char>());
}

void print_cert_chain(const certs::CertChain& chain, int indent) {
  std::string pad(indent, ' ');
  const auto& sa = chain.sa;
  std::cout << pad << "issuer certificate\n"
            << pad << "  public key     " << hex_encode(sa.server_public_key)
            << '\n'
            << pad << "  valid          [" << sa.not_before << ", "
            << sa.not_after << "] us\n"
            << pad << "  report verdict " << ias::to_string(sa.ias_report.verdict)
            << '\n'
            << pad << "  enclave        "
            << sa.ias_report.quote.measurement.hex() << '\n'
            << pad << "  group/platform " << sa.ias_report.quote.group_id << '/'
            << sa.ias_report.quote.platform_id << '\n';
  const auto& comp = chain.component;
  std::cout << pad << "component certificate\n"
            << pad << "  public key     "
            << hex_encode(comp.component_public_key) << '\n'
            << pad << "  measurement    " << comp.component_measurement.hex()
            << '\n'
            << pad << "  authlist hash  "
            << crypto::hash(comp.authlist_bytes).hex() << '\n'
            << pad << "  issued at      " << comp.issued_at << " us\n";
  try {
    authlist::AuthList list = authlist::AuthList::decode(comp.authlist_bytes);
    std::cout << pad << "  authlist (" << list.entries().size()
              << " entries)\n";
    std::istringstream text(list.to_text());
    std::string line;
    while (std::getline(text, line)) {
      std::cout << pad << "    " << line << '\n';
    }
  } catch (const tlv::MalformedEncoding&) {
    std::cout << pad << "  authlist       <malformed>\n";
  }
  if (chain.verified) {
    std::cout << pad << "verified-app certificate\n"
              << pad << "  target service " << chain.verified->target_service
              << '\n'
              << pad << "  measurement    "
              << chain.verified->component_measurement.hex() << '\n';
  }
  if (chain.verifier_chain) {
    std::cout << pad << "verifier chain\n";
    print_cert_chain(*chain.verifier_chain, indent + 2);
  }
}

int cmd_cert_inspect(const std::string& path) {
  try {
    Bytes data = read_binary(path);
    certs::CertChain chain = certs::CertChain::decode(data);
    print_cert_chain(chain, 0);
    return 0;
  } catch (const tlv::MalformedEncoding& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}

int cmd_authlist_encode(const std::string& path, const std::string& out_path) {
  try {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream text;
    text << in.rdbuf();
    authlist::AuthList list = authlist::AuthList::parse_text(text.str());
    if (out_path.empty()) {
      std::cout << hex_encode(list.encoded()) << '\n';
    } else {
      std::ofstream out(out_path, std::ios::binary);
      out.write(reinterpret_cast<const char*>(list.encoded().data()),
                static_cast<std::streamsize>(list.encoded().size()));
    }
    std::cerr << "hash " << list.hash().hex() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}

int cmd_authlist_decode(const std::string& path) {
  try {
    Bytes data = read_binary(path);
    authlist::AuthList list = authlist::AuthList::decode(data);
    std::cout << list.to_text();
    std::cerr << "hash " << list.hash().hex() << '\n';
    return 0;
  } catch (const tlv::MalformedEncoding& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}

int cmd_demo_dht(int nodes) {
  bench::WorkloadConfig config;
  config.n_nodes = nodes;
  config.records_per_node = 8;
  config.clients = 1;
  config.warmup_s = 0.2;
  config.measure_s = 2.0;
  config.time_scale = 0.01;
  bench::BenchWorld world(config, bench::ChannelMode::DecentRA);
  std::cout << "ring with " << nodes
            << " nodes formed; certificates exchanged over the issuer path\n";
  auto row = world.run_point(50);
  std::cout << "demo load: " << row.throughput_rps << " req/s, mean latency "
            << row.latency_mean_ms << " ms, " << row.handshakes
            << " handshakes, " << row.resumptions << " resumptions\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale distributed-enclave platform simulator"};
  app.require_subcommand(1);

  // scenario run
  auto* scenario_cmd = app.add_subcommand("scenario", "scenario operations");
  scenario_cmd->require_subcommand(1);
  auto* run_cmd = scenario_cmd->add_subcommand("run", "run a scenario file");
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  bool check = false;
  run_cmd->add_option("file", scenario_path, "scenario file")->required();
  run_cmd->add_option("--seed", seed, "override the scenario seed");
  run_cmd->add_flag("--assert", check, "evaluate declared assertions");

  // bench sweep
  auto* bench_cmd = app.add_subcommand("bench", "benchmark operations");
  bench_cmd->require_subcommand(1);
  auto* sweep_cmd = bench_cmd->add_subcommand("sweep", "run a benchmark plan");
  std::string bench_path, bench_mode, bench_out;
  sweep_cmd->add_option("file", bench_path, "benchmark plan file")->required();
  sweep_cmd->add_option("--mode", bench_mode,
                        "restrict to one mode (decent-ra|ra-only|plain)");
  sweep_cmd->add_option("--out", bench_out, "write CSV to this file");

  // cert inspect
  auto* cert_cmd = app.add_subcommand("cert", "certificate tools");
  cert_cmd->require_subcommand(1);
  auto* inspect_cmd = cert_cmd->add_subcommand("inspect", "print a chain");
  std::string cert_path;
  inspect_cmd->add_option("file", cert_path, "encoded certificate chain")
      ->required();

  // authlist encode/decode
  auto* authlist_cmd = app.add_subcommand("authlist", "authorization lists");
  authlist_cmd->require_subcommand(1);
  auto* encode_cmd = authlist_cmd->add_subcommand("encode", "text to binary");
  std::string al_in, al_out;
  encode_cmd->add_option("file", al_in, "text authlist")->required();
  encode_cmd->add_option("--out", al_out, "write binary to this file");
  auto* decode_cmd = authlist_cmd->add_subcommand("decode", "binary to text");
  std::string al_bin;
  decode_cmd->add_option("file", al_bin, "binary authlist")->required();

  // demo dht
  auto* demo_cmd = app.add_subcommand("demo", "demos");
  demo_cmd->require_subcommand(1);
  auto* dht_cmd = demo_cmd->add_subcommand("dht", "small live ring");
  int nodes = 4;
  dht_cmd->add_option("--nodes", nodes, "ring size")->default_val(4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      return cmd_scenario_run(scenario_path, seed, check);
    }
    if (sweep_cmd->parsed()) {
      return cmd_bench(bench_path, bench_mode, bench_out);
    }
    if (inspect_cmd->parsed()) {
      return cmd_cert_inspect(cert_path);
    }
    if (encode_cmd->parsed()) {
      return cmd_authlist_encode(al_in, al_out);
    }
    if (decode_cmd->parsed()) {
      return cmd_authlist_decode(al_bin);
    }
    if (dht_cmd->parsed()) {
      return cmd_demo_dht(nodes);
    }
  } catch (const scenario::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 2;
}
