// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

namespace decent {

// Microseconds. Virtual time in deterministic runs, steady-clock time in the
// real-time benchmark fabric.
using Micros = std::uint64_t;

inline constexpr Micros kMillisecond = 1000;
inline constexpr Micros kSecond = 1000 * kMillisecond;

inline Micros from_seconds(double s) {
  return static_cast<Micros>(s * static_cast<double>(kSecond));
}
inline double to_seconds(Micros t) {
  return static_cast<double>(t) / static_cast<double>(kSecond);
}
inline double to_millis(Micros t) { return static_cast<double>(t) / 1000.0; }

// A monotonic time source. Enclave platforms read their trusted timer from
// one of these; hosts cannot influence it.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Micros now() const = 0;
};

// Clock advanced explicitly; used by the discrete-event scheduler and by
// unit tests.
class ManualClock : public Clock {
 public:
  explicit ManualClock(Micros start = 0) : now_(start) {}

  Micros now() const override { return now_.load(std::memory_order_relaxed); }

  void advance_to(Micros t) {
    Micros cur = now_.load(std::memory_order_relaxed);
    while (t > cur &&
           !now_.compare_exchange_weak(cur, t, std::memory_order_relaxed)) {
    }
  }
  void advance_by(Micros d) { advance_to(now() + d); }

 private:
  std::atomic<Micros> now_;
};

using ClockPtr = std::shared_ptr<const Clock>;

}  // namespace decent
