// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/tlv.hpp"

namespace decent::tlv {

void Writer::field(std::uint8_t tag, ByteView value) {
  if (static_cast<int>(tag) <= last_tag_) {
    throw std::logic_error("tlv fields must be written in ascending tag order");
  }
  last_tag_ = tag;
  out_.push_back(tag);
  store_u32be(out_, static_cast<std::uint32_t>(value.size()));
  append(out_, value);
}

void Writer::field_u8(std::uint8_t tag, std::uint8_t v) {
  field(tag, ByteView(&v, 1));
}

void Writer::field_u64(std::uint8_t tag, std::uint64_t v) {
  Bytes b;
  store_u64be(b, v);
  field(tag, b);
}

void Writer::field_str(std::uint8_t tag, std::string_view v) {
  field(tag, ByteView(reinterpret_cast<const std::uint8_t*>(v.data()),
                      v.size()));
}

std::optional<std::uint8_t> Reader::peek_tag() const {
  if (pos_ >= data_.size()) return std::nullopt;
  return data_[pos_];
}

ByteView Reader::next(std::uint8_t expected_tag) {
  if (pos_ + 5 > data_.size()) {
    throw MalformedEncoding("truncated field header");
  }
  std::uint8_t tag = data_[pos_];
  if (tag != expected_tag) {
    throw MalformedEncoding("unexpected tag " + std::to_string(tag) +
                            ", wanted " + std::to_string(expected_tag));
  }
  if (static_cast<int>(tag) <= last_tag_) {
    throw MalformedEncoding("tag order violation at tag " +
                            std::to_string(tag));
  }
  std::uint32_t len = load_u32be(data_.subspan(pos_ + 1, 4));
  pos_ += 5;
  if (pos_ + len > data_.size()) {
    throw MalformedEncoding("field body truncated at tag " +
                            std::to_string(tag));
  }
  ByteView body = data_.subspan(pos_, len);
  pos_ += len;
  last_tag_ = tag;
  return body;
}

ByteView Reader::field(std::uint8_t tag) {
  auto t = peek_tag();
  if (!t) {
    throw MalformedEncoding("missing required tag " + std::to_string(tag));
  }
  return next(tag);
}

std::uint8_t Reader::field_u8(std::uint8_t tag) {
  ByteView v = field(tag);
  if (v.size() != 1) throw MalformedEncoding("u8 field of wrong size");
  return v[0];
}

std::uint64_t Reader::field_u64(std::uint8_t tag) {
  ByteView v = field(tag);
  if (v.size() != 8) throw MalformedEncoding("u64 field of wrong size");
  return load_u64be(v);
}

std::string Reader::field_str(std::uint8_t tag) {
  ByteView v = field(tag);
  return std::string(v.begin(), v.end());
}

std::optional<ByteView> Reader::maybe_field(std::uint8_t tag) {
  auto t = peek_tag();
  if (!t || *t != tag) return std::nullopt;
  return next(tag);
}

void Reader::finish() {
  if (!at_end()) {
    throw MalformedEncoding("trailing bytes after final field");
  }
}

}  // namespace decent::tlv
