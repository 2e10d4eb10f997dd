#pragma once

// Seeded random draws. The bounded and real-valued draws are written out so
// that traces do not depend on the standard library's distribution code.

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace roster {

using Rng = std::mt19937_64;

/// Uniform integer in [lo, hi] (inclusive), by rejection.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

inline int uniform_index(Rng& rng, int n) { return static_cast<int>(uniform_int(rng, 0, n - 1)); }

/// Uniform real in [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Index drawn from a discrete distribution given by `probs`.
template <class Range>
int draw_from(Rng& rng, const Range& probs) {
  double u = uniform01(rng);
  int last = 0;
  int i = 0;
  for (double p : probs) {
    if (p > 0) last = i;
    if (u < p) return i;
    u -= p;
    ++i;
  }
  return last;
}

template <class T>
void shuffle(Rng& rng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace roster
