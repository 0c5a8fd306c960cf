// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/authlist.hpp"

#include <algorithm>

#include "decent/tlv.hpp"
#include "doctest.h"

using namespace decent;
using namespace decent::authlist;
using decent::crypto::Digest256;

namespace {

Entry entry(std::string_view abbrev, const std::string& service,
            AuthListPtr nested = nullptr) {
  return Entry(Digest256::from_abbrev_hex(abbrev), ServiceName(service),
               std::move(nested));
}

// The four-row example table: one service provided by two binaries.
AuthList ride_share_list() {
  return AuthList::from_entries({
      entry("dff1...8e41", "BillingService"),
      entry("3fb5...cc46", "PaymentService"),
      entry("6233...0f6d", "TripMatcher"),
      entry("717e...5c1b", "TripMatcher"),
  });
}

}  // namespace

TEST_CASE("service names are validated on construction") {
  CHECK(ServiceName::is_valid("TripMatcher"));
  CHECK(ServiceName::is_valid("a"));
  CHECK(ServiceName::is_valid(std::string(64, 'x')));
  CHECK(ServiceName::is_valid("with-dash_and_underscore9"));
  CHECK_FALSE(ServiceName::is_valid(""));
  CHECK_FALSE(ServiceName::is_valid(std::string(65, 'x')));
  CHECK_FALSE(ServiceName::is_valid("has space"));
  CHECK_FALSE(ServiceName::is_valid("Dot.Com"));
  CHECK_THROWS_AS(ServiceName("bad name"), std::invalid_argument);
}

TEST_CASE("empty list has the fixed six-byte encoding") {
  AuthList empty;
  CHECK(empty.encoded().size() == 6);
  CHECK(AuthList::decode(empty.encoded()).entries().empty());
  CHECK_FALSE(empty.authorizes(Digest256{}, "Anything"));
}

TEST_CASE("construction sorts and the codec round-trips") {
  AuthList list = ride_share_list();
  CHECK(std::is_sorted(list.entries().begin(), list.entries().end(),
                       [](const Entry& a, const Entry& b) {
                         return a.digest != b.digest ? a.digest < b.digest
                                                     : a.service < b.service;
                       }));

  AuthList decoded = AuthList::decode(list.encoded());
  CHECK(decoded.matches(list));
  CHECK(decoded.entries().size() == 4);

  // Reverse supply order canonicalizes to the same bytes.
  std::vector<Entry> reversed(list.entries().rbegin(), list.entries().rend());
  AuthList again = AuthList::from_entries(reversed);
  CHECK(again.matches(list));
}

TEST_CASE("authorizes honours multi-binary services") {
  AuthList list = ride_share_list();
  CHECK(list.authorizes(Digest256::from_abbrev_hex("6233...0f6d"),
                        "TripMatcher"));
  CHECK(list.authorizes(Digest256::from_abbrev_hex("717e...5c1b"),
                        "TripMatcher"));
  CHECK(list.authorizes(Digest256::from_abbrev_hex("dff1...8e41"),
                        "BillingService"));
  CHECK_FALSE(list.authorizes(Digest256::from_abbrev_hex("dff1...8e41"),
                              "TripMatcher"));
  CHECK_FALSE(list.authorizes(Digest256::from_abbrev_hex("0000...0001"),
                              "TripMatcher"));
}

TEST_CASE("matches is byte equality") {
  AuthList a = ride_share_list();
  CHECK(a.matches(a));
  AuthList b = AuthList::from_entries({
      entry("dff1...8e41", "BillingService"),
      entry("3fb5...cc46", "PaymentService"),
      entry("6233...0f6d", "TripMatcher"),
  });
  CHECK_FALSE(a.matches(b));
  CHECK(crypto::hash(a.encoded()) == a.hash());
}

TEST_CASE("nested definitions for shared stateless services") {
  auto sub = std::make_shared<AuthList>(AuthList::from_entries({
      entry("dff1...8e41", "BillingService"),
      entry("23ed...e470", "TripPlanner"),
  }));
  AuthList outer = AuthList::from_entries({
      entry("3fb5...cc46", "PaymentService"),
      entry("6233...0f6d", "TripMatcher"),
      entry("23ed...e470", "TripPlanner", sub),
  });

  auto found = outer.nested_definition(
      Digest256::from_abbrev_hex("23ed...e470"), "TripPlanner");
  REQUIRE(found != nullptr);
  CHECK(found->matches(*sub));
  CHECK(outer.nested_definition(Digest256::from_abbrev_hex("6233...0f6d"),
                                "TripMatcher") == nullptr);

  AuthList reparsed = AuthList::decode(outer.encoded());
  CHECK(reparsed.matches(outer));
  auto nested_again = reparsed.nested_definition(
      Digest256::from_abbrev_hex("23ed...e470"), "TripPlanner");
  REQUIRE(nested_again != nullptr);
  CHECK(nested_again->matches(*sub));
}

TEST_CASE("nesting deeper than one level is rejected") {
  auto level2 = std::make_shared<AuthList>(AuthList::from_entries({
      entry("0000...0001", "Inner"),
  }));
  auto level1 = std::make_shared<AuthList>(AuthList::from_entries({
      Entry(Digest256::from_abbrev_hex("0000...0002"), ServiceName("Mid"),
            level2),
  }));
  CHECK_THROWS_AS(AuthList::from_entries({Entry(
                      Digest256::from_abbrev_hex("0000...0003"),
                      ServiceName("Outer"), level1)}),
                  std::invalid_argument);
}

TEST_CASE("decode rejects malformed encodings") {
  AuthList list = ride_share_list();
  Bytes good = list.encoded();

  Bytes truncated(good.begin(), good.end() - 3);
  CHECK_THROWS_AS(AuthList::decode(truncated), tlv::MalformedEncoding);

  Bytes trailing = good;
  trailing.push_back(0x00);
  CHECK_THROWS_AS(AuthList::decode(trailing), tlv::MalformedEncoding);

  Bytes bad_magic = good;
  bad_magic[0] ^= 0xff;
  CHECK_THROWS_AS(AuthList::decode(bad_magic), tlv::MalformedEncoding);

  // Swap the first two entries to break canonical order.
  AuthList two = AuthList::from_entries({
      entry("0000...0001", "Aaa"),
      entry("0000...0002", "Bbb"),
  });
  Bytes swapped = two.encoded();
  std::size_t entry_size = 32 + 1 + 3 + 1;
  std::vector<std::uint8_t> first(swapped.begin() + 6,
                                  swapped.begin() + 6 + entry_size);
  std::copy(swapped.begin() + 6 + entry_size,
            swapped.begin() + 6 + 2 * entry_size, swapped.begin() + 6);
  std::copy(first.begin(), first.end(), swapped.begin() + 6 + entry_size);
  CHECK_THROWS_AS(AuthList::decode(swapped), tlv::MalformedEncoding);

  // Duplicate entries violate strict ordering too.
  Bytes duplicated = two.encoded();
  std::copy(duplicated.begin() + 6, duplicated.begin() + 6 + entry_size,
            duplicated.begin() + 6 + entry_size);
  CHECK_THROWS_AS(AuthList::decode(duplicated), tlv::MalformedEncoding);
}

TEST_CASE("hash equality coincides with matches for random pairs") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Entry> entries;
    int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      Digest256 d;
      rng.fill(d.bytes);
      entries.push_back(
          Entry(d, ServiceName("Svc" + std::to_string(rng.below(4)))));
    }
    AuthList a = AuthList::from_entries(entries);
    std::vector<Entry> shuffled;
    while (!entries.empty()) {
      std::size_t pick = rng.below(entries.size());
      shuffled.push_back(entries[pick]);
      entries.erase(entries.begin() + static_cast<long>(pick));
    }
    AuthList b = AuthList::from_entries(shuffled);
    CHECK(a.matches(b));
    CHECK(a.hash() == b.hash());

    Digest256 extra;
    rng.fill(extra.bytes);
    shuffled.push_back(Entry(extra, ServiceName("Other")));
    AuthList c = AuthList::from_entries(shuffled);
    CHECK_FALSE(a.matches(c));
    CHECK(a.hash() != c.hash());
  }
}

TEST_CASE("text form round-trips including nested blocks") {
  auto sub = std::make_shared<AuthList>(AuthList::from_entries({
      entry("dff1...8e41", "BillingService"),
      entry("23ed...e470", "TripPlanner"),
  }));
  AuthList outer = AuthList::from_entries({
      entry("3fb5...cc46", "PaymentService"),
      entry("23ed...e470", "TripPlanner", sub),
  });
  AuthList reparsed = AuthList::parse_text(outer.to_text());
  CHECK(reparsed.matches(outer));

  AuthList from_abbrev = AuthList::parse_text(
      "# comment line\n"
      "3fb5...cc46 PaymentService\n"
      "23ed...e470 TripPlanner {\n"
      "  dff1...8e41 BillingService\n"
      "  23ed...e470 TripPlanner\n"
      "}\n");
  CHECK(from_abbrev.matches(outer));

  CHECK_THROWS_AS(AuthList::parse_text("zzzz NotHex\n"), std::invalid_argument);
  CHECK_THROWS_AS(AuthList::parse_text("dff1...8e41 Svc {\n"),
                  std::invalid_argument);
}
