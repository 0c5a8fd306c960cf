// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decent {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
  return std::string(b.begin(), b.end());
}

inline void append(Bytes& out, ByteView more) {
  out.insert(out.end(), more.begin(), more.end());
}

inline Bytes concat(ByteView a, ByteView b) {
  Bytes out(a.begin(), a.end());
  append(out, b);
  return out;
}

inline Bytes concat(ByteView a, ByteView b, ByteView c) {
  Bytes out = concat(a, b);
  append(out, c);
  return out;
}

std::string hex_encode(ByteView data);
Bytes hex_decode(std::string_view hex);  // throws std::invalid_argument

// True if `needle` occurs as a contiguous byte substring of `haystack`.
// Used by taint assertions over captured frames and serialized artifacts.
bool contains_bytes(ByteView haystack, ByteView needle);

void store_u16be(Bytes& out, std::uint16_t v);
void store_u32be(Bytes& out, std::uint32_t v);
void store_u64be(Bytes& out, std::uint64_t v);
std::uint16_t load_u16be(ByteView in);  // in.size() >= 2
std::uint32_t load_u32be(ByteView in);
std::uint64_t load_u64be(ByteView in);

// Deterministic random source. Every key, nonce and sampled delay in the
// simulator is drawn through one of these so that runs are reproducible
// from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
  }

  double uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
  }

  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(eng_);
  }

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
      b = static_cast<std::uint8_t>(eng_() & 0xff);
    }
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  // Independent child stream; order of fork() calls determines the result,
  // which is itself deterministic during world construction.
  Rng fork(std::string_view label);

 private:
  std::mt19937_64 eng_;
};

}  // namespace decent
