// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "decent/crypto.hpp"

// The authorization table of an application instance: an immutable,
// canonically encoded map from code digests to service names. Connection
// acceptance everywhere else in the system reduces to byte equality of
// these encodings, so the encoding must be injective over valid lists.
namespace decent::authlist {

// Service name under which platform-local certificate issuers must appear.
inline constexpr std::string_view kServerService = "DecentServer";
// Default service name for revocation-list providers; chains presented for
// this service (and for configured verifier-of-revoker names) are exempt
// from revocation checks.
inline constexpr std::string_view kRevokerService = "DecentRevoker";

class ServiceName {
 public:
  // 1..64 bytes from [A-Za-z0-9_-]; throws std::invalid_argument otherwise.
  explicit ServiceName(std::string_view name);

  static bool is_valid(std::string_view name);

  const std::string& str() const { return name_; }

  auto operator<=>(const ServiceName&) const = default;

 private:
  std::string name_;
};

class AuthList;
using AuthListPtr = std::shared_ptr<const AuthList>;

struct Entry {
  crypto::Digest256 digest;
  ServiceName service;
  AuthListPtr nested;  // definition of a stateless open service, or null

  Entry(crypto::Digest256 d, ServiceName s, AuthListPtr n = nullptr)
      : digest(d), service(std::move(s)), nested(std::move(n)) {}
};

class AuthList {
 public:
  AuthList();  // empty list

  // Sorts entries into canonical order. Throws std::invalid_argument on
  // conflicting duplicates or nesting deeper than one level; exact
  // (digest, service, nested) duplicates collapse to one entry.
  static AuthList from_entries(std::vector<Entry> entries);

  // Inverse of encoded(). Rejects unsorted input, duplicates, bad service
  // names, over-deep nesting, truncation, and trailing bytes.
  static AuthList decode(ByteView data);  // throws tlv::MalformedEncoding

  // Human-readable form: one "hex-digest service" pair per line, nested
  // definitions in an indented { } block. parse_text accepts abbreviated
  // digests written as "dff1...8e41".
  static AuthList parse_text(std::string_view text);
  std::string to_text() const;

  const std::vector<Entry>& entries() const { return entries_; }
  const Bytes& encoded() const { return encoded_; }
  const crypto::Digest256& hash() const { return hash_; }

  bool authorizes(const crypto::Digest256& digest,
                  std::string_view service) const;
  bool matches(const AuthList& other) const {
    return encoded_ == other.encoded_;
  }
  // Nested definition attached to (digest, service), or null.
  AuthListPtr nested_definition(const crypto::Digest256& digest,
                                std::string_view service) const;

 private:
  static AuthList decode_inner(ByteView data, std::size_t& pos, int depth);
  void build(std::vector<Entry> entries);

  std::vector<Entry> entries_;
  Bytes encoded_;
  crypto::Digest256 hash_;
};

}  // namespace decent::authlist
