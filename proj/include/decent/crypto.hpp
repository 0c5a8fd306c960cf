// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>

#include "decent/bytes.hpp"

// Cryptographic primitives behind stable interfaces. The concrete algorithm
// suite is pinned below; everything above this layer is algorithm-agnostic.
//
// Suite (see kSuiteName):
//   hash       SHA-256
//   signature  Ed25519 (deterministic for a fixed key and message)
//   AEAD       ChaCha20-Poly1305 (IETF, 12-byte nonce)
//   KEX        X25519
//   KDF        HKDF-SHA256 (RFC 5869 extract-then-expand)
namespace decent::crypto {

inline constexpr const char* kSuiteName =
    "sha256/ed25519/chacha20poly1305/x25519/hkdf-sha256";

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kPrivateKeySize = 64;
inline constexpr std::size_t kAeadKeySize = 32;
inline constexpr std::size_t kAeadNonceSize = 12;
inline constexpr std::size_t kKexKeySize = 32;

struct Digest256 {
  std::array<std::uint8_t, kDigestSize> bytes{};

  auto operator<=>(const Digest256&) const = default;

  ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
  std::string hex() const { return hex_encode(view()); }

  static Digest256 from_bytes(ByteView b);  // throws if b.size() != 32
  // Parses "dff1...8e41" style abbreviations: leading hex bytes, then zero
  // padding, then trailing hex bytes. Full 64-digit strings also accepted.
  static Digest256 from_abbrev_hex(std::string_view text);
};

struct Digest256Hash {
  std::size_t operator()(const Digest256& d) const {
    std::size_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | d.bytes[i];
    return h;
  }
};

Digest256 hash(ByteView data);
inline Digest256 hash(const Bytes& data) { return hash(ByteView(data)); }
inline Digest256 hash(std::string_view s) {
  return hash(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()),
                       s.size()));
}

struct SigningKeyPair {
  Bytes private_key;  // 64 bytes, never serialized by any codec in this repo
  Bytes public_key;   // 32 bytes
  Digest256 fingerprint;  // hash of the public key encoding

  static SigningKeyPair generate(Rng& rng);
  static SigningKeyPair from_seed(ByteView seed32);
};

inline Digest256 key_fingerprint(ByteView public_key) {
  return hash(public_key);
}

// Detached signature; deterministic given (key, message).
Bytes sign(const Bytes& private_key, ByteView msg);
// False on bad signature, malformed key, or malformed signature. Never throws.
bool verify(ByteView public_key, ByteView msg, ByteView sig);

// RFC 5869. Throws std::invalid_argument when out_len > 255 * 32.
Bytes hkdf(ByteView ikm, ByteView salt, ByteView info, std::size_t out_len);

// HMAC-SHA256, arbitrary key length. 32-byte output.
Bytes hmac(ByteView key, ByteView data);

struct AeadKey {
  std::array<std::uint8_t, kAeadKeySize> bytes{};

  auto operator<=>(const AeadKey&) const = default;
  ByteView view() const { return ByteView(bytes.data(), bytes.size()); }

  static AeadKey from_bytes(ByteView b);  // throws if b.size() != 32
};

Bytes aead_seal(const AeadKey& key, ByteView nonce, ByteView ad, ByteView pt);
// nullopt on any modification of ciphertext, ad, nonce, or wrong key.
std::optional<Bytes> aead_open(const AeadKey& key, ByteView nonce, ByteView ad,
                               ByteView ct);

struct KexKeyPair {
  Bytes private_key;  // 32 bytes
  Bytes public_key;   // 32 bytes

  static KexKeyPair generate(Rng& rng);
  static KexKeyPair from_private(Bytes private_key);
};

// X25519 shared secret. Throws std::invalid_argument on malformed input.
Bytes kex_shared(ByteView private_key, ByteView peer_public);

}  // namespace decent::crypto
