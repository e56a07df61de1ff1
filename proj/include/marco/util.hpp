#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace marco::util {

inline constexpr std::string_view kTruncationMarker = " [...truncated]";

// Keeps the head of `s`, appending the truncation marker when anything was
// cut. The result never exceeds cap + marker length.
std::string truncate_head(std::string_view s, std::size_t cap);

// Same, but the marker counts against the cap, so the result length is <= cap.
std::string truncate_within(std::string_view s, std::size_t cap);

std::string trim(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

// Deterministic bounded RNG. std::uniform_int_distribution is not pinned
// across standard library implementations, so dataset generation rolls its
// own rejection sampler on top of a fixed 64-bit mixer.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform in [lo, hi], inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi);
  bool chance(double p);

 private:
  std::uint64_t state_;
};

}  // namespace marco::util
