#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace nmfvi {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hash a seed together with a path of keys into an independent stream key.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t k = splitmix64(seed);
  for (auto v : keys) k = splitmix64(k ^ splitmix64(v + 0x632be59bd9b4e019ULL));
  return k;
}

/// Named sub-streams of the global seed.
enum class Stream : std::uint64_t {
  design = 1,
  response = 2,
  solver = 3,
  gibbs = 4,
  signal = 5,
  evaluation = 6,
};

/// Counter-based generator: output k is a hash of (key, k). Cheap to construct,
/// so every (seed, index) pair can own its stream and results do not depend on
/// how work is split across threads.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
      : key_(derive_key(seed, keys)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ ^ (0xd1b54a32d192ed03ULL * ++counter_)); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  /// Standard normal via Box-Muller; one draw consumes two outputs.
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
  return derive_key(seed, {static_cast<std::uint64_t>(s)});
}

}  // namespace nmfvi
