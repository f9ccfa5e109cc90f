#include "nmfvi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nmfvi/tilt.hpp"

namespace nmfvi {

double mse(const Vector& u_hat, const Vector& beta_star) {
  if (u_hat.size() != beta_star.size()) throw ShapeError("mse: length mismatch");
  if (u_hat.size() == 0) throw ShapeError("mse: empty vectors");
  return (u_hat - beta_star).squaredNorm() / static_cast<double>(u_hat.size());
}

std::vector<Interval> credible_intervals(const DiscretePrior& prior, const Vector& u_star, const Vector& d,
                                         double b2_zero, double alpha, double epsilon) {
  if (!(alpha > 0 && alpha < 0.5)) throw RangeError("credible_intervals: alpha must lie in (0, 1/2)");
  if (!(epsilon > 0)) throw RangeError("credible_intervals: epsilon must be positive");
  if (u_star.size() != d.size()) throw ShapeError("credible_intervals: u and d lengths differ");
  std::vector<Interval> out(static_cast<std::size_t>(u_star.size()));
  for (Eigen::Index j = 0; j < u_star.size(); ++j) {
    const TiltParams t{h_inverse(prior, u_star[j], d[j], b2_zero), d[j], b2_zero};
    out[static_cast<std::size_t>(j)] = {tilt_quantile(prior, t, 0.5 * alpha) - epsilon,
                                        tilt_quantile(prior, t, 1.0 - 0.5 * alpha) + epsilon};
  }
  return out;
}

double coverage_threshold(double alpha, double slack) { return 1.0 - alpha - slack; }

CoverageSummary average_coverage(const std::vector<Vector>& samples, const std::vector<Interval>& intervals,
                                 double threshold) {
  CoverageSummary s;
  s.threshold = threshold;
  if (samples.empty()) return s;
  const auto p = static_cast<Eigen::Index>(intervals.size());
  s.per_draw.reserve(samples.size());
  for (const auto& b : samples) {
    if (b.size() != p) throw ShapeError("average_coverage: sample length does not match the intervals");
    int hit = 0;
    for (Eigen::Index j = 0; j < p; ++j) hit += intervals[static_cast<std::size_t>(j)].contains(b[j]);
    s.per_draw.push_back(p ? static_cast<double>(hit) / static_cast<double>(p) : 1.0);
  }
  double total = 0;
  int above = 0;
  s.min = s.per_draw.front();
  for (double c : s.per_draw) {
    total += c;
    s.min = std::min(s.min, c);
    above += c >= threshold;
  }
  const auto m = static_cast<double>(s.per_draw.size());
  s.mean = total / m;
  s.exceedance = above / m;
  return s;
}

double classification_error(const Vector& x_tilde, const Vector& means, double f_tilde) {
  if (x_tilde.size() != means.size()) throw ShapeError("classification_error: length mismatch");
  return 2.0 * std::abs(detail::sigmoid(x_tilde.dot(means)) - f_tilde);
}

double w1_empirical(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("w1_empirical: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
  }
  // Integrate |F_a - F_b| over the merged breakpoints.
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double x = std::min(a.front(), b.front()), total = 0;
  while (ia < a.size() || ib < b.size()) {
    const double next = ib == b.size() || (ia < a.size() && a[ia] <= b[ib]) ? a[ia] : b[ib];
    total += std::abs(ia / na - ib / nb) * (next - x);
    x = next;
    while (ia < a.size() && a[ia] == x) ++ia;
    while (ib < b.size() && b[ib] == x) ++ib;
  }
  return total;
}

double coordwise_w1(const std::vector<Vector>& samples_a, const std::vector<Vector>& samples_b) {
  if (samples_a.empty() || samples_b.empty()) throw ParameterError("coordwise_w1: empty sample set");
  const Eigen::Index p = samples_a.front().size();
  for (const auto* set : {&samples_a, &samples_b})
    for (const auto& s : *set)
      if (s.size() != p) throw ShapeError("coordwise_w1: samples have inconsistent dimension");
  if (p == 0) return 0;
  double total = 0;
  std::vector<double> a(samples_a.size()), b(samples_b.size());
  for (Eigen::Index j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = samples_a[k][j];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] = samples_b[k][j];
    total += w1_empirical(a, b);
  }
  return total / static_cast<double>(p);
}

}  // namespace nmfvi
