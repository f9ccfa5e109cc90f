#pragma once

#include <cstddef>
#include <cstdint>

namespace nmfvi {

/// Monte Carlo settings. Base draws are a pure function of (seed, sample
/// index), so repeated evaluations reuse the same random numbers.
struct MCConfig {
  std::size_t n_samples = 2000;
  std::uint64_t seed = 0;
  bool antithetic = false;
  /// Discrete-prior expectations switch to exact enumeration when
  /// |support|^p <= enumeration_cap (0 disables).
  std::size_t enumeration_cap = 0;

  void validate() const;
};

/// A Monte Carlo estimate with its standard error (se = 0 when exact).
struct Estimate {
  double value = 0;
  double se = 0;
  bool exact = false;
};

}  // namespace nmfvi
