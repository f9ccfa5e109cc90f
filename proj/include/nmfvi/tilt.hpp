#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nmfvi/glm.hpp"

namespace nmfvi {

/// Quadratic exponential tilt of a prior:
///   dpi_tilt/dpi (x) = exp(gamma1 x - b2_zero (d/2) x^2 - c_pi(gamma1, d)).
struct TiltParams {
  double gamma1 = 0.0;
  double d = 0.0;
  double b2_zero = 1.0;
};

/// Normalized probabilities of the tilted measure on the prior support.
std::vector<double> tilted_probs(const DiscretePrior& prior, const TiltParams& tilt);

/// Log normaliser c_pi(gamma) of the tilt.
double c_pi(const DiscretePrior& prior, const TiltParams& tilt);
double c_pi(const PriorSpec& prior, const TiltParams& tilt);
/// Tilted mean (d/dgamma1 of c_pi).
double c_dot(const DiscretePrior& prior, const TiltParams& tilt);
/// Tilted variance (d^2/dgamma1^2 of c_pi).
double c_ddot(const DiscretePrior& prior, const TiltParams& tilt);

/// gamma1 whose tilt at scale d has mean u. Newton on gamma1 with a bisection
/// fallback inside an expanding bracket; |c_dot - u| < 1e-10 on return.
/// u is clamped to [min + 1e-12, max - 1e-12] of the support; values strictly
/// outside the closed hull throw RangeError.
double h_inverse(const DiscretePrior& prior, double u, double d, double b2_zero);

/// KL(pi_(h(u,d),d) || pi) = u h - b2_zero (d/2) E[X^2] - c_pi(h, d).
double kl_tilt_vs_prior(const DiscretePrior& prior, double u, double d, double b2_zero);

/// d/du of kl_tilt_vs_prior: h(u,d) - b2_zero (d/2) Cov(X, X^2) / Var(X).
double kl_tilt_grad_u(const DiscretePrior& prior, double u, double d, double b2_zero);

/// sum_j kl_tilt_vs_prior(u_j, d_j). Coordinate failures are rethrown with the index.
double product_kl(const DiscretePrior& prior, std::span<const double> u, std::span<const double> d,
                  double b2_zero);

/// Smallest support point whose cumulative tilted mass reaches `level`
/// (within 1e-12, so ties at exact probability sums are not lost to rounding).
double tilt_quantile(const DiscretePrior& prior, const TiltParams& tilt, double level);
double tilt_quantile(const DiscretePrior& prior, double u, double d, double b2_zero, double level);

/// Cov(f(X), X) under the tilt; f given by its values on the sorted support.
double tilt_cov(const DiscretePrior& prior, const TiltParams& tilt, std::span<const double> f);
double tilt_cov(const DiscretePrior& prior, const TiltParams& tilt,
                const std::function<double(double)>& f);

/// Product of per-coordinate tilts sharing a prior and b''(0).
struct ProductTilt {
  DiscretePrior prior;
  std::vector<TiltParams> params;

  /// Builds Q_u = prod_j pi_(h(u_j, d_j), d_j).
  static ProductTilt from_means(const DiscretePrior& prior, std::span<const double> u,
                                std::span<const double> d, double b2_zero);

  std::size_t dim() const { return params.size(); }
  Vector means() const;
  /// p x |support| table of tilted probabilities.
  std::vector<std::vector<double>> probability_table() const;
};

/// Draw support index from a probability row by CDF inversion.
std::size_t sample_index(std::span<const double> probs, double uniform);

}  // namespace nmfvi
