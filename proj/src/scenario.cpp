// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/scenario.hpp"

#include <fstream>
#include <sstream>

namespace decent::scenario {

namespace {

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) {
    if (w[0] == '#') break;
    words.push_back(w);
  }
  return words;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Micros seconds_to_micros(const std::string& s) {
  return from_seconds(std::stod(s));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

sim::ScenarioConfig parse_scenario(std::string_view text) {
  sim::ScenarioConfig config;
  std::istringstream stream{std::string(text)};
  std::string line;
  int line_no = 0;
  sim::ScenarioConfig::AuthListDef* open_list = nullptr;

  while (std::getline(stream, line)) {
    ++line_no;
    auto words = split_words(line);
    if (words.empty()) continue;
    const std::string& head = words[0];
    try {
      if (open_list != nullptr) {
        if (head == "end") {
          open_list = nullptr;
        } else if (head == "entry" && words.size() >= 3) {
          sim::ScenarioConfig::AuthEntry entry;
          entry.blob = words[1];
          entry.service = words[2];
          if (words.size() >= 5 && words[3] == "nested") {
            entry.nested_list = words[4];
          }
          open_list->entries.push_back(entry);
        } else {
          throw ParseError(line_no, "expected 'entry' or 'end'");
        }
        continue;
      }

      if (head == "seed") {
        config.seed = std::stoull(words.at(1));
      } else if (head == "latency_us") {
        config.link_latency = std::stoull(words.at(1));
      } else if (head == "run_for_s") {
        config.run_for = seconds_to_micros(words.at(1));
      } else if (head == "adversary") {
        config.adversary = words.at(1);
      } else if (head == "stakeholders") {
        config.stakeholders = std::stoul(words.at(1));
      } else if (head == "threshold") {
        config.threshold = std::stoul(words.at(1));
      } else if (head == "platform") {
        sim::ScenarioConfig::Platform p;
        p.name = words.at(1);
        for (std::size_t i = 2; i + 1 < words.size(); i += 2) {
          if (words[i] == "group") p.group = words[i + 1];
        }
        config.platforms.push_back(p);
      } else if (head == "host") {
        sim::ScenarioConfig::Host h;
        h.name = words.at(1);
        for (std::size_t i = 2; i < words.size(); ++i) {
          if (words[i] == "platform") {
            h.platform = words.at(++i);
          } else if (words[i] == "honest") {
            h.honest = true;
          } else if (words[i] == "malicious") {
            h.honest = false;
          }
        }
        config.hosts.push_back(h);
      } else if (head == "blob") {
        config.blobs.push_back(words.at(1));
      } else if (head == "secret") {
        config.secrets.emplace_back(words.at(1),
                                    words.size() > 2 ? std::stoul(words[2])
                                                     : 32);
      } else if (head == "authlist") {
        config.authlists.push_back({words.at(1), {}});
        open_list = &config.authlists.back();
      } else if (head == "component") {
        sim::ScenarioConfig::Component c;
        c.name = words.at(1);
        for (std::size_t i = 2; i < words.size(); ++i) {
          const std::string& key = words[i];
          if (key == "host") {
            c.host = words.at(++i);
          } else if (key == "blob") {
            c.blob = words.at(++i);
          } else if (key == "authlist") {
            c.authlist = words.at(++i);
          } else if (key == "service") {
            c.service = words.at(++i);
          } else if (key == "serve") {
            c.serve = true;
          } else if (key == "expect") {
            c.expect_service = words.at(++i);
          } else if (key == "expect_verifier") {
            c.expect_verifier_service = words.at(++i);
          } else if (key == "revoker") {
            c.is_revoker = true;
          } else if (key == "verifier") {
            c.is_verifier = true;
          } else if (key == "verified_by") {
            c.verified_by = words.at(++i);
          } else if (key == "poll") {
            for (const auto& name : split_csv(words.at(++i))) {
              c.revokers.endpoints.push_back({name, "svc"});
            }
            c.poll_revokers = true;
          } else if (key == "poll_interval_s") {
            c.revokers.poll_interval = seconds_to_micros(words.at(++i));
          } else if (key == "poll_timeout_s") {
            c.revokers.poll_timeout = seconds_to_micros(words.at(++i));
          } else if (key == "max_missed") {
            c.revokers.max_missed = std::stoi(words.at(++i));
          } else {
            throw ParseError(line_no, "unknown component key '" + key + "'");
          }
        }
        config.components.push_back(c);
      } else if (head == "at") {
        sim::ScenarioConfig::Action a;
        a.at = seconds_to_micros(words.at(1));
        const std::string& verb = words.at(2);
        if (verb == "send") {
          a.kind = sim::ScenarioConfig::Action::Kind::SendSecret;
          a.from = words.at(3);
          a.to = words.at(4);
          a.service = words.at(5);
          a.payload = words.at(6);
          if (words.size() >= 9 && words[7] == "via") {
            a.verifier_service = words[8];
          }
        } else if (verb == "leak") {
          a.kind = sim::ScenarioConfig::Action::Kind::Leak;
          a.from = words.at(3);
        } else if (verb == "revoke") {
          a.kind = sim::ScenarioConfig::Action::Kind::SubmitRevocation;
          a.to = words.at(3);
          a.payload = words.at(4);
        } else if (verb == "ias_revoke") {
          a.kind = sim::ScenarioConfig::Action::Kind::IasRevoke;
          a.payload = words.at(3);
        } else {
          throw ParseError(line_no, "unknown action '" + verb + "'");
        }
        config.actions.push_back(a);
      } else if (head == "assert") {
        std::string rest;
        for (std::size_t i = 1; i < words.size(); ++i) {
          if (i > 1) rest += ' ';
          rest += words[i];
        }
        config.assertions.push_back(rest);
      } else {
        throw ParseError(line_no, "unknown directive '" + head + "'");
      }
    } catch (const std::out_of_range&) {
      throw ParseError(line_no, "missing argument for '" + head + "'");
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (open_list != nullptr) {
    throw ParseError(line_no, "unterminated authlist block");
  }
  return config;
}

sim::ScenarioConfig load_scenario(const std::string& path) {
  return parse_scenario(read_file(path));
}

BenchPlan parse_bench(std::string_view text) {
  BenchPlan plan;
  std::istringstream stream{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    auto words = split_words(line);
    if (words.empty()) continue;
    const std::string& head = words[0];
    try {
      if (head == "kind") {
        const std::string& k = words.at(1);
        if (k == "sweep") {
          plan.kind = BenchPlan::Kind::Sweep;
        } else if (k == "latency") {
          plan.kind = BenchPlan::Kind::LatencyCurve;
        } else if (k == "nodes") {
          plan.kind = BenchPlan::Kind::NodeScaling;
        } else {
          throw ParseError(line_no, "unknown bench kind '" + k + "'");
        }
      } else if (head == "seed") {
        plan.workload.seed = std::stoull(words.at(1));
      } else if (head == "nodes") {
        plan.workload.n_nodes = std::stoi(words.at(1));
      } else if (head == "clients") {
        plan.workload.clients = std::stoi(words.at(1));
      } else if (head == "read_fraction") {
        plan.workload.read_fraction = std::stod(words.at(1));
      } else if (head == "records_per_node") {
        plan.workload.records_per_node = std::stoi(words.at(1));
      } else if (head == "value_size") {
        plan.workload.value_size = std::stoi(words.at(1));
      } else if (head == "warmup_s") {
        plan.workload.warmup_s = std::stod(words.at(1));
      } else if (head == "measure_s") {
        plan.workload.measure_s = std::stod(words.at(1));
      } else if (head == "repeats") {
        plan.workload.repeats = std::stoi(words.at(1));
      } else if (head == "time_scale") {
        plan.workload.time_scale = std::stod(words.at(1));
      } else if (head == "latency_us") {
        plan.workload.link_latency = std::stoull(words.at(1));
      } else if (head == "sessions") {
        plan.workload.requests_per_session.clear();
        for (const auto& v : split_csv(words.at(1))) {
          plan.workload.requests_per_session.push_back(std::stoi(v));
        }
      } else if (head == "session_length") {
        plan.fixed_session_length = std::stoi(words.at(1));
      } else if (head == "targets") {
        plan.latency_targets.clear();
        for (const auto& v : split_csv(words.at(1))) {
          plan.latency_targets.push_back(std::stod(v));
        }
      } else if (head == "node_counts") {
        plan.node_counts.clear();
        for (const auto& v : split_csv(words.at(1))) {
          plan.node_counts.push_back(std::stoi(v));
        }
      } else if (head == "modes") {
        plan.modes.clear();
        for (const auto& v : split_csv(words.at(1))) {
          auto mode = bench::mode_from_string(v);
          if (!mode) throw ParseError(line_no, "unknown mode '" + v + "'");
          plan.modes.push_back(*mode);
        }
      } else {
        throw ParseError(line_no, "unknown directive '" + head + "'");
      }
    } catch (const std::out_of_range&) {
      throw ParseError(line_no, "missing argument for '" + head + "'");
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return plan;
}

BenchPlan load_bench(const std::string& path) {
  return parse_bench(read_file(path));
}

}  // namespace decent::scenario
