#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace baptp::numcore {

// Counter-based pseudo-random generator. A draw is a pure function of
// (seed, stream, counter), so any consumer can reproduce a value from its
// logical position alone. That property is what keeps dropout masks and
// shuffles bitwise stable under kernel-level parallelism.
class CounterRng {
 public:
  CounterRng() = default;
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : state_(mix_seed(seed, stream)) {}

  // Stateless access by counter.
  static std::uint64_t bits_at(std::uint64_t seed, std::uint64_t stream,
                               std::uint64_t counter) {
    return scramble(mix_seed(seed, stream) + kGolden * (counter + 1));
  }
  static double uniform01_at(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) {
    return to_unit(bits_at(seed, stream, counter));
  }

  std::uint64_t next_bits() { return scramble(state_ + kGolden * (++counter_)); }
  // Uniform in [0, 1).
  double next_uniform01() { return to_unit(next_bits()); }
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_uniform01();
  }
  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    return n == 0 ? 0 : next_bits() % n;
  }

  // Fisher-Yates; identical results for identical (seed, stream, call order).
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

  static std::uint64_t scramble(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }
  static std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return scramble(scramble(seed + kGolden) ^ scramble(stream + 0x8a5cd789635d2dffull));
  }
  static double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  std::uint64_t state_ = 0;
  std::uint64_t counter_ = 0;
};

// Stable stream id for a named purpose ("init", "shuffle", ...).
constexpr std::uint64_t stream_id(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Derives a child seed from a seed and a path of indices, so independent
// consumers (epochs, batches, tracks) get decorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = seed;
  for (std::uint64_t p : path) {
    s = CounterRng::bits_at(s, 0x5851f42d4c957f2dull, p);
  }
  return s;
}

}  // namespace baptp::numcore
