// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/authlist.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "decent/tlv.hpp"

namespace decent::authlist {

namespace {

constexpr char kMagic[4] = {'D', 'A', 'L', '1'};
constexpr std::size_t kMaxNameLen = 64;

bool entry_less(const Entry& a, const Entry& b) {
  if (a.digest != b.digest) return a.digest < b.digest;
  return a.service < b.service;
}

bool nested_equal(const AuthListPtr& a, const AuthListPtr& b) {
  if (!a && !b) return true;
  if (!a || !b) return false;
  return a->matches(*b);
}

void encode_into(Bytes& out, const std::vector<Entry>& entries) {
  out.insert(out.end(), kMagic, kMagic + 4);
  store_u16be(out, static_cast<std::uint16_t>(entries.size()));
  for (const Entry& e : entries) {
    append(out, e.digest.view());
    const std::string& name = e.service.str();
    out.push_back(static_cast<std::uint8_t>(name.size()));
    append(out, ByteView(reinterpret_cast<const std::uint8_t*>(name.data()),
                         name.size()));
    out.push_back(e.nested ? 1 : 0);
    if (e.nested) {
      append(out, e.nested->encoded());
    }
  }
}

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ServiceName::ServiceName(std::string_view name) {
  if (!is_valid(name)) {
    throw std::invalid_argument("invalid service name: '" + std::string(name) +
                                "'");
  }
  name_ = std::string(name);
}

bool ServiceName::is_valid(std::string_view name) {
  if (name.empty() || name.size() > kMaxNameLen) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

AuthList::AuthList() { build({}); }

AuthList AuthList::from_entries(std::vector<Entry> entries) {
  std::stable_sort(entries.begin(), entries.end(), entry_less);
  std::vector<Entry> unique;
  for (auto& e : entries) {
    if (e.nested) {
      for (const Entry& inner : e.nested->entries()) {
        if (inner.nested) {
          throw std::invalid_argument("authlist nesting deeper than one level");
        }
      }
    }
    if (!unique.empty() && unique.back().digest == e.digest &&
        unique.back().service == e.service) {
      if (!nested_equal(unique.back().nested, e.nested)) {
        throw std::invalid_argument(
            "conflicting duplicate authlist entry for " + e.digest.hex());
      }
      continue;
    }
    unique.push_back(std::move(e));
  }
  AuthList list;
  list.build(std::move(unique));
  return list;
}

void AuthList::build(std::vector<Entry> entries) {
  entries_ = std::move(entries);
  encoded_.clear();
  encode_into(encoded_, entries_);
  hash_ = crypto::hash(encoded_);
}

AuthList AuthList::decode_inner(ByteView data, std::size_t& pos, int depth) {
  if (pos + 6 > data.size()) {
    throw tlv::MalformedEncoding("authlist header truncated");
  }
  if (!std::equal(kMagic, kMagic + 4, data.begin() + pos)) {
    throw tlv::MalformedEncoding("bad authlist magic");
  }
  std::uint16_t count = load_u16be(data.subspan(pos + 4, 2));
  pos += 6;

  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    if (pos + crypto::kDigestSize + 1 > data.size()) {
      throw tlv::MalformedEncoding("authlist entry truncated");
    }
    auto digest =
        crypto::Digest256::from_bytes(data.subspan(pos, crypto::kDigestSize));
    pos += crypto::kDigestSize;
    std::uint8_t name_len = data[pos++];
    if (pos + name_len + 1 > data.size()) {
      throw tlv::MalformedEncoding("authlist entry truncated");
    }
    std::string name(data.begin() + pos, data.begin() + pos + name_len);
    pos += name_len;
    if (!ServiceName::is_valid(name)) {
      throw tlv::MalformedEncoding("invalid service name in authlist");
    }
    std::uint8_t nested_flag = data[pos++];
    AuthListPtr nested;
    if (nested_flag == 1) {
      if (depth >= 1) {
        throw tlv::MalformedEncoding("authlist nesting deeper than one level");
      }
      nested = std::make_shared<AuthList>(decode_inner(data, pos, depth + 1));
    } else if (nested_flag != 0) {
      throw tlv::MalformedEncoding("bad nested flag");
    }
    Entry entry(digest, ServiceName(name), std::move(nested));
    if (!entries.empty()) {
      if (!entry_less(entries.back(), entry)) {
        throw tlv::MalformedEncoding(
            "authlist entries unsorted or duplicated");
      }
    }
    entries.push_back(std::move(entry));
  }

  AuthList list;
  list.build(std::move(entries));
  return list;
}

AuthList AuthList::decode(ByteView data) {
  std::size_t pos = 0;
  AuthList list = decode_inner(data, pos, 0);
  if (pos != data.size()) {
    throw tlv::MalformedEncoding("trailing bytes after authlist");
  }
  return list;
}

bool AuthList::authorizes(const crypto::Digest256& digest,
                          std::string_view service) const {
  for (const Entry& e : entries_) {
    if (e.digest == digest && e.service.str() == service) return true;
  }
  return false;
}

AuthListPtr AuthList::nested_definition(const crypto::Digest256& digest,
                                        std::string_view service) const {
  for (const Entry& e : entries_) {
    if (e.digest == digest && e.service.str() == service) return e.nested;
  }
  return nullptr;
}

std::string AuthList::to_text() const {
  std::ostringstream out;
  for (const Entry& e : entries_) {
    out << e.digest.hex() << ' ' << e.service.str();
    if (e.nested) {
      out << " {\n";
      for (const Entry& inner : e.nested->entries()) {
        out << "  " << inner.digest.hex() << ' ' << inner.service.str()
            << '\n';
      }
      out << "}";
    }
    out << '\n';
  }
  return out.str();
}

AuthList AuthList::parse_text(std::string_view text) {
  std::vector<Entry> outer;
  std::vector<Entry> inner;
  bool in_block = false;
  crypto::Digest256 block_digest;
  std::string block_service;

  std::istringstream stream{std::string(text)};
  std::string raw;
  while (std::getline(stream, raw)) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line == "}") {
      if (!in_block) {
        throw std::invalid_argument("unmatched '}' in authlist text");
      }
      auto nested =
          std::make_shared<AuthList>(AuthList::from_entries(inner));
      outer.emplace_back(block_digest, ServiceName(block_service), nested);
      inner.clear();
      in_block = false;
      continue;
    }
    bool opens_block = false;
    if (line.size() >= 1 && line.back() == '{') {
      opens_block = true;
      line = trim(std::string_view(line).substr(0, line.size() - 1));
    }
    std::istringstream fields(line);
    std::string digest_text, service;
    if (!(fields >> digest_text >> service)) {
      throw std::invalid_argument("bad authlist line: '" + raw + "'");
    }
    std::string extra;
    if (fields >> extra) {
      throw std::invalid_argument("bad authlist line: '" + raw + "'");
    }
    auto digest = crypto::Digest256::from_abbrev_hex(digest_text);
    if (opens_block) {
      if (in_block) {
        throw std::invalid_argument("authlist nesting deeper than one level");
      }
      in_block = true;
      block_digest = digest;
      block_service = service;
    } else if (in_block) {
      inner.emplace_back(digest, ServiceName(service));
    } else {
      outer.emplace_back(digest, ServiceName(service));
    }
  }
  if (in_block) {
    throw std::invalid_argument("unterminated '{' block in authlist text");
  }
  return AuthList::from_entries(std::move(outer));
}

}  // namespace decent::authlist
