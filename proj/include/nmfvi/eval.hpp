#pragma once

#include <vector>

#include "nmfvi/glm.hpp"

namespace nmfvi {

/// (1/p) ||u_hat - beta_star||^2
double mse(const Vector& u_hat, const Vector& beta_star);

struct Interval {
  double lo = 0;
  double hi = 0;

  bool contains(double x) const { return lo < x && x < hi; }
};

/// Open intervals (q^{alpha/2} - eps, q^{1-alpha/2} + eps) of the tilt
/// pi_(h(u_j, d_j), d_j) for each coordinate.
std::vector<Interval> credible_intervals(const DiscretePrior& prior, const Vector& u_star, const Vector& d,
                                         double b2_zero, double alpha, double epsilon);

struct CoverageSummary {
  double mean = 0;
  double min = 0;
  /// Fraction of draws with coverage >= threshold.
  double exceedance = 0;
  double threshold = 0;
  std::vector<double> per_draw;
};

/// 1 - alpha - slack. The slack defaults to the interval widening epsilon.
double coverage_threshold(double alpha, double slack);

/// Per-draw coverage (1/p) sum_j 1{beta_j in I_j}.
CoverageSummary average_coverage(const std::vector<Vector>& samples, const std::vector<Interval>& intervals,
                                 double threshold);

/// 2 |phi(sum_j m_j x_j) - f_tilde|, phi the logistic function.
double classification_error(const Vector& x_tilde, const Vector& means, double f_tilde);

/// 1-D Wasserstein-1 distance between two empirical distributions. Equal
/// counts reduce to the mean absolute difference of sorted samples; unequal
/// counts integrate |F_a - F_b| exactly.
double w1_empirical(std::vector<double> a, std::vector<double> b);

/// (1/p) sum_j W1 of the coordinate-j marginals. This is a lower bound on the
/// joint W1 / p, not an estimate of it.
double coordwise_w1(const std::vector<Vector>& samples_a, const std::vector<Vector>& samples_b);

}  // namespace nmfvi
