// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "decent/bytes.hpp"

// Canonical TLV encoding used by every wire structure in this project.
// A structure is a sequence of fields, each `u8 tag | u32 length | bytes`,
// with tags strictly ascending. Duplicate, out-of-order, or unknown tags are
// rejected, so each valid structure has exactly one encoding.
namespace decent::tlv {

class MalformedEncoding : public std::runtime_error {
 public:
  explicit MalformedEncoding(const std::string& what)
      : std::runtime_error("malformed encoding: " + what) {}
};

class Writer {
 public:
  void field(std::uint8_t tag, ByteView value);
  void field_u8(std::uint8_t tag, std::uint8_t v);
  void field_u64(std::uint8_t tag, std::uint64_t v);
  void field_str(std::uint8_t tag, std::string_view v);

  const Bytes& bytes() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
  int last_tag_ = -1;
};

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  // Required field: throws MalformedEncoding unless the next field has `tag`.
  ByteView field(std::uint8_t tag);
  std::uint8_t field_u8(std::uint8_t tag);
  std::uint64_t field_u64(std::uint8_t tag);
  std::string field_str(std::uint8_t tag);

  // Optional field: consumed and returned only when the next tag matches.
  std::optional<ByteView> maybe_field(std::uint8_t tag);

  bool at_end() const { return pos_ == data_.size(); }
  // Throws unless all input was consumed.
  void finish();

 private:
  std::optional<std::uint8_t> peek_tag() const;
  ByteView next(std::uint8_t expected_tag);

  ByteView data_;
  std::size_t pos_ = 0;
  int last_tag_ = -1;
};

}  // namespace decent::tlv
