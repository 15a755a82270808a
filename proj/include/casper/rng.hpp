#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace casper {

// SplitMix64 output function (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives the seed of an independent stream from a master seed and a path of
/// indices. Streams for a trial use the path
/// {subject, condition, set-size index, trial}; the mapping is stable across
/// platforms and thread schedules.
constexpr std::uint64_t derive_stream(std::uint64_t master,
                                      std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t index : path) {
    h = splitmix64(h ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
  }
  return h;
}

/// Deterministic random stream. The engine is mt19937_64, whose output
/// sequence is fixed by the standard; the conversions below are written out
/// so results do not depend on a standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform on {0, ..., n - 1}; n must be positive.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return static_cast<std::size_t>(draw % bound);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace casper
