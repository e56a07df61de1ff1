#include <doctest.h>

#include <set>
#include <string>

#include "marco/util.hpp"

using namespace marco;

TEST_CASE("truncate_head keeps short text unchanged") {
  CHECK(util::truncate_head("hello", 10) == "hello");
  CHECK(util::truncate_head("hello", 5) == "hello");
}

TEST_CASE("truncate_head cuts to cap and appends the marker") {
  std::string text(100, 'x');
  std::string cut = util::truncate_head(text, 10);
  CHECK(cut.size() == 10 + util::kTruncationMarker.size());
  CHECK(cut.substr(0, 10) == std::string(10, 'x'));
  CHECK(cut.substr(10) == util::kTruncationMarker);
}

TEST_CASE("truncate_within never exceeds the cap") {
  std::string text(100, 'x');
  std::string cut = util::truncate_within(text, 30);
  CHECK(cut.size() == 30);
  CHECK(cut.substr(cut.size() - util::kTruncationMarker.size()) == util::kTruncationMarker);
  CHECK(util::truncate_within("short", 30) == "short");
}

TEST_CASE("trim strips surrounding whitespace only") {
  CHECK(util::trim("  a b  ") == "a b");
  CHECK(util::trim("\n\t x \r\n") == "x");
  CHECK(util::trim("   ") == "");
  CHECK(util::trim("") == "");
}

TEST_CASE("contains and count_occurrences") {
  CHECK(util::contains("abcdef", "cde"));
  CHECK_FALSE(util::contains("abcdef", "xyz"));
  CHECK(util::count_occurrences("aaaa", "aa") == 2);
  CHECK(util::count_occurrences("abcabc", "abc") == 2);
  CHECK(util::count_occurrences("abc", "") == 0);
}

TEST_CASE("join") {
  CHECK(util::join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(util::join({}, ", ") == "");
  CHECK(util::join({"solo"}, ", ") == "solo");
}

TEST_CASE("rng is deterministic per seed") {
  util::Rng a(42);
  util::Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  util::Rng c(43);
  util::Rng d(42);
  bool all_same = true;
  for (int i = 0; i < 10; ++i) {
    if (c.next() != d.next()) all_same = false;
  }
  CHECK_FALSE(all_same);
}

TEST_CASE("rng range is inclusive and bounded") {
  util::Rng rng(7);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    std::int64_t value = rng.range(-3, 3);
    CHECK(value >= -3);
    CHECK(value <= 3);
    seen.insert(value);
  }
  CHECK(seen.size() == 7);
  CHECK(rng.range(5, 5) == 5);
}

TEST_CASE("rng chance respects the extremes") {
  util::Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(rng.chance(0.0));
    CHECK(rng.chance(1.0));
  }
}
