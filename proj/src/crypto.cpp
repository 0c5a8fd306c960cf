// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/crypto.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace decent::crypto {

namespace {

void ensure_sodium() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0) {
      throw std::runtime_error("libsodium initialization failed");
    }
  });
}

Bytes hmac_sha256(ByteView key, ByteView data) {
  ensure_sodium();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, data.data(), data.size());
  Bytes mac(crypto_auth_hmacsha256_BYTES);
  crypto_auth_hmacsha256_final(&st, mac.data());
  return mac;
}

}  // namespace

Digest256 Digest256::from_bytes(ByteView b) {
  if (b.size() != kDigestSize) {
    throw std::invalid_argument("digest must be exactly 32 bytes");
  }
  Digest256 d;
  std::copy(b.begin(), b.end(), d.bytes.begin());
  return d;
}

Digest256 Digest256::from_abbrev_hex(std::string_view text) {
  auto dots = text.find("...");
  if (dots == std::string_view::npos) {
    return from_bytes(hex_decode(text));
  }
  Bytes head = hex_decode(text.substr(0, dots));
  Bytes tail = hex_decode(text.substr(dots + 3));
  if (head.size() + tail.size() > kDigestSize) {
    throw std::invalid_argument("abbreviated digest too long");
  }
  Digest256 d;
  std::copy(head.begin(), head.end(), d.bytes.begin());
  std::copy(tail.begin(), tail.end(), d.bytes.end() - tail.size());
  return d;
}

Digest256 hash(ByteView data) {
  ensure_sodium();
  Digest256 d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

SigningKeyPair SigningKeyPair::generate(Rng& rng) {
  Bytes seed = rng.bytes(crypto_sign_SEEDBYTES);
  return from_seed(seed);
}

SigningKeyPair SigningKeyPair::from_seed(ByteView seed32) {
  ensure_sodium();
  if (seed32.size() != crypto_sign_SEEDBYTES) {
    throw std::invalid_argument("signing seed must be 32 bytes");
  }
  SigningKeyPair kp;
  kp.private_key.resize(crypto_sign_SECRETKEYBYTES);
  kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  crypto_sign_seed_keypair(kp.public_key.data(), kp.private_key.data(),
                           seed32.data());
  kp.fingerprint = key_fingerprint(kp.public_key);
  return kp;
}

Bytes sign(const Bytes& private_key, ByteView msg) {
  ensure_sodium();
  if (private_key.size() != crypto_sign_SECRETKEYBYTES) {
    throw std::invalid_argument("malformed signing key");
  }
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(),
                       private_key.data());
  return sig;
}

bool verify(ByteView public_key, ByteView msg, ByteView sig) {
  ensure_sodium();
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES ||
      sig.size() != crypto_sign_BYTES) {
    return false;
  }
  return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(),
                                     public_key.data()) == 0;
}

Bytes hmac(ByteView key, ByteView data) { return hmac_sha256(key, data); }

Bytes hkdf(ByteView ikm, ByteView salt, ByteView info, std::size_t out_len) {
  constexpr std::size_t kHashLen = crypto_auth_hmacsha256_BYTES;
  if (out_len > 255 * kHashLen) {
    throw std::invalid_argument("hkdf output length too large");
  }
  // Extract.
  Bytes zero_salt(kHashLen, 0);
  ByteView salt_used = salt.empty() ? ByteView(zero_salt) : salt;
  Bytes prk = hmac_sha256(salt_used, ikm);
  // Expand.
  Bytes okm;
  okm.reserve(out_len);
  Bytes block;
  std::uint8_t counter = 1;
  while (okm.size() < out_len) {
    Bytes input = block;
    append(input, info);
    input.push_back(counter++);
    block = hmac_sha256(prk, input);
    std::size_t take = std::min(block.size(), out_len - okm.size());
    okm.insert(okm.end(), block.begin(), block.begin() + take);
  }
  return okm;
}

AeadKey AeadKey::from_bytes(ByteView b) {
  if (b.size() != kAeadKeySize) {
    throw std::invalid_argument("aead key must be exactly 32 bytes");
  }
  AeadKey k;
  std::copy(b.begin(), b.end(), k.bytes.begin());
  return k;
}

Bytes aead_seal(const AeadKey& key, ByteView nonce, ByteView ad, ByteView pt) {
  ensure_sodium();
  if (nonce.size() != kAeadNonceSize) {
    throw std::invalid_argument("aead nonce must be 12 bytes");
  }
  Bytes ct(pt.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long ct_len = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(
      ct.data(), &ct_len, pt.data(), pt.size(), ad.data(), ad.size(), nullptr,
      nonce.data(), key.bytes.data());
  ct.resize(ct_len);
  return ct;
}

std::optional<Bytes> aead_open(const AeadKey& key, ByteView nonce, ByteView ad,
                               ByteView ct) {
  ensure_sodium();
  if (nonce.size() != kAeadNonceSize ||
      ct.size() < crypto_aead_chacha20poly1305_ietf_ABYTES) {
    return std::nullopt;
  }
  Bytes pt(ct.size() - crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long pt_len = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(
          pt.data(), &pt_len, nullptr, ct.data(), ct.size(), ad.data(),
          ad.size(), nonce.data(), key.bytes.data()) != 0) {
    return std::nullopt;
  }
  pt.resize(pt_len);
  return pt;
}

KexKeyPair KexKeyPair::generate(Rng& rng) {
  return from_private(rng.bytes(crypto_scalarmult_SCALARBYTES));
}

KexKeyPair KexKeyPair::from_private(Bytes private_key) {
  ensure_sodium();
  if (private_key.size() != crypto_scalarmult_SCALARBYTES) {
    throw std::invalid_argument("kex private key must be 32 bytes");
  }
  KexKeyPair kp;
  kp.private_key = std::move(private_key);
  kp.public_key.resize(crypto_scalarmult_BYTES);
  crypto_scalarmult_base(kp.public_key.data(), kp.private_key.data());
  return kp;
}

Bytes kex_shared(ByteView private_key, ByteView peer_public) {
  ensure_sodium();
  if (private_key.size() != crypto_scalarmult_SCALARBYTES ||
      peer_public.size() != crypto_scalarmult_BYTES) {
    throw std::invalid_argument("malformed key exchange input");
  }
  Bytes shared(crypto_scalarmult_BYTES);
  if (crypto_scalarmult(shared.data(), private_key.data(),
                        peer_public.data()) != 0) {
    throw std::invalid_argument("key exchange produced a weak shared secret");
  }
  return shared;
}

}  // namespace decent::crypto
