// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "decent/bytes.hpp"
#include "decent/time.hpp"

// Message fabric connecting simulated hosts. Two implementations share this
// interface:
//
//   VirtualFabric   discrete-event, virtual time, strictly one task running
//                   at a time; identical seeds give identical event traces.
//                   Supports frame interception for adversary scenarios.
//   RealtimeFabric  plain threads, steady-clock time, latencies as real
//                   sleeps; used by the benchmark harness where wall-clock
//                   throughput matters and determinism does not.
//
// Protocol code is written in blocking style against Conn/Listener and runs
// unchanged on either fabric. Blocking calls may throw TaskKilled during
// fabric teardown; tasks must let it propagate.
namespace decent::fabric {

struct Address {
  std::string node;
  std::string port;

  std::string str() const { return node + ":" + port; }
  bool operator==(const Address&) const = default;
};

enum class DisconnectKind { Timeout, Closed, Refused };

class TransportError : public std::runtime_error {
 public:
  TransportError(DisconnectKind kind, const std::string& what)
      : std::runtime_error("transport: " + what), kind(kind) {}
  DisconnectKind kind;
};

// Thrown out of blocking calls when the fabric shuts down.
class TaskKilled {};

inline constexpr Micros kNoTimeout = ~Micros{0};

class Conn {
 public:
  virtual ~Conn() = default;
  virtual void send(Bytes frame) = 0;
  virtual Bytes recv(Micros timeout = kNoTimeout) = 0;
  virtual void close() = 0;
  virtual const Address& local_addr() const = 0;
  virtual const Address& remote_addr() const = 0;
};
using ConnPtr = std::shared_ptr<Conn>;

class Listener {
 public:
  virtual ~Listener() = default;
  virtual ConnPtr accept(Micros timeout = kNoTimeout) = 0;
  virtual void close() = 0;
  virtual const Address& addr() const = 0;
};
using ListenerPtr = std::shared_ptr<Listener>;

// Cross-cutting protocol counters, snapshotted by benchmarks and asserted by
// tests (e.g. "resumption performs no certificate verification").
struct Counters {
  std::atomic<std::uint64_t> full_handshakes{0};
  std::atomic<std::uint64_t> resumptions{0};
  std::atomic<std::uint64_t> ias_report_calls{0};
  std::atomic<std::uint64_t> ias_sigrl_calls{0};
  std::atomic<std::uint64_t> frames_delivered{0};
};

class Fabric {
 public:
  virtual ~Fabric() = default;

  virtual Micros now() const = 0;
  virtual ClockPtr clock() const = 0;
  virtual void sleep_for(Micros d) = 0;
  virtual void sleep_until(Micros t) = 0;

  virtual ListenerPtr listen(const Address& addr) = 0;
  // Throws TransportError(Refused) when nothing listens on `addr`.
  virtual ConnPtr dial(const Address& from_node, const Address& addr,
                       Micros timeout = kNoTimeout) = 0;

  virtual void spawn(std::string name, std::function<void()> body) = 0;

  Counters& counters() { return counters_; }

  // One-way frame latency applied to every link.
  void set_link_latency(Micros d) { link_latency_ = d; }
  Micros link_latency() const { return link_latency_; }

 protected:
  Counters counters_;
  Micros link_latency_ = 100;  // 0.1 ms default
};

using ConnId = std::uint64_t;

// A frame crossing a link that touches an adversary-controlled host. The
// tap may rewrite `frame` in place; `Drop` suppresses delivery. Taps run
// inside the scheduler and must not block; use VirtualFabric::inject to
// add traffic.
struct TapEvent {
  ConnId conn;
  bool to_acceptor;  // direction: true = dialer-to-acceptor
  Address from;
  Address to;
  Bytes frame;
};
enum class TapAction { Deliver, Drop };
using FrameTap = std::function<TapAction(TapEvent&)>;

class VirtualFabric final : public Fabric {
 public:
  explicit VirtualFabric(std::uint64_t seed);
  ~VirtualFabric() override;

  Micros now() const override;
  ClockPtr clock() const override;
  void sleep_for(Micros d) override;
  void sleep_until(Micros t) override;
  ListenerPtr listen(const Address& addr) override;
  ConnPtr dial(const Address& from_node, const Address& addr,
               Micros timeout = kNoTimeout) override;
  void spawn(std::string name, std::function<void()> body) override;

  // Runs queued events with time <= until, then advances the clock to
  // `until`. Returns the number of events processed. Must be called from
  // the driving thread, never from a task.
  std::size_t run_until(Micros until);
  // Runs until no events remain (tasks all parked or finished).
  std::size_t run_to_quiescence();

  // Deterministic child RNG; draw order is part of the seeded state.
  Rng fork_rng(std::string_view label);

  // Adversary surface: frames on links touching these nodes hit the tap.
  void mark_tapped(const std::string& node);
  // Every link, regardless of host: used by frame-capture taint checks.
  void tap_all_links();
  void set_tap(FrameTap tap);
  // Schedules delivery of a forged/duplicated frame on an existing conn.
  void inject(ConnId conn, bool to_acceptor, Bytes frame);

  // Schedules `fn` at absolute time `t` on the scheduler (non-blocking).
  void schedule_at(Micros t, std::function<void()> fn);

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

class RealtimeFabric final : public Fabric {
 public:
  // Latencies are multiplied by `time_scale` before sleeping.
  explicit RealtimeFabric(double time_scale = 1.0);
  ~RealtimeFabric() override;

  Micros now() const override;
  ClockPtr clock() const override;
  void sleep_for(Micros d) override;
  void sleep_until(Micros t) override;
  ListenerPtr listen(const Address& addr) override;
  ConnPtr dial(const Address& from_node, const Address& addr,
               Micros timeout = kNoTimeout) override;
  void spawn(std::string name, std::function<void()> body) override;

  double time_scale() const { return time_scale_; }

  // Closes every listener and conn, then joins all spawned threads.
  void shutdown();

  struct Impl;

 private:
  double time_scale_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace decent::fabric
