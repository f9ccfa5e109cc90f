#include "nmfvi/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nmfvi {

namespace {

constexpr double kHullMargin = 1e-12;
constexpr double kMeanTol = 1e-10;
constexpr int kMaxIter = 200;

void check_tilt(const TiltParams& t) {
  if (!std::isfinite(t.gamma1) || !std::isfinite(t.d) || !std::isfinite(t.b2_zero))
    throw NumericError("tilt parameters must be finite");
  if (t.d < 0) throw RangeError("tilt scale d must be non-negative");
}

// Unnormalised log weights; returns their log-sum-exp.
double log_weights(const DiscretePrior& prior, const TiltParams& t, std::vector<double>& lw) {
  check_tilt(t);
  const auto& s = prior.support();
  const auto& lp = prior.log_probs();
  lw.resize(s.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.size(); ++k) {
    lw[k] = lp[k] + t.gamma1 * s[k] - t.b2_zero * 0.5 * t.d * s[k] * s[k];
    m = std::max(m, lw[k]);
  }
  double acc = 0;
  for (double v : lw) acc += std::exp(v - m);
  return m + std::log(acc);
}

struct Moments {
  double mean = 0;
  double var = 0;
};

Moments moments(const std::vector<double>& support, const std::vector<double>& q) {
  Moments mo;
  for (std::size_t k = 0; k < q.size(); ++k) mo.mean += q[k] * support[k];
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double c = support[k] - mo.mean;
    mo.var += q[k] * c * c;
  }
  return mo;
}

}  // namespace

std::vector<double> tilted_probs(const DiscretePrior& prior, const TiltParams& tilt) {
  std::vector<double> lw;
  const double lse = log_weights(prior, tilt, lw);
  for (double& v : lw) v = std::exp(v - lse);
  return lw;
}

double c_pi(const DiscretePrior& prior, const TiltParams& tilt) {
  std::vector<double> lw;
  return log_weights(prior, tilt, lw);
}

double c_pi(const PriorSpec& prior, const TiltParams& tilt) {
  return c_pi(require_discrete(prior, "exponential tilting"), tilt);
}

double c_dot(const DiscretePrior& prior, const TiltParams& tilt) {
  return moments(prior.support(), tilted_probs(prior, tilt)).mean;
}

double c_ddot(const DiscretePrior& prior, const TiltParams& tilt) {
  return moments(prior.support(), tilted_probs(prior, tilt)).var;
}

double h_inverse(const DiscretePrior& prior, double u, double d, double b2_zero) {
  if (!std::isfinite(u)) throw RangeError("h_inverse: mean is not finite");
  if (prior.size() < 2) throw RangeError("h_inverse: prior support is a single point");
  if (u < prior.min() || u > prior.max())
    throw RangeError("h_inverse: mean " + std::to_string(u) + " outside the support hull [" +
                     std::to_string(prior.min()) + ", " + std::to_string(prior.max()) + "]");
  u = std::clamp(u, prior.min() + kHullMargin, prior.max() - kHullMargin);

  auto residual = [&](double g) { return c_dot(prior, {g, d, b2_zero}) - u; };

  // Bracket: c_dot is increasing in gamma1.
  double lo = -1.0, hi = 1.0;
  while (residual(lo) > 0) {
    hi = lo;
    lo *= 2.0;
    if (lo < -1e6) throw NumericError("h_inverse: failed to bracket the root");
  }
  while (residual(hi) < 0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NumericError("h_inverse: failed to bracket the root");
  }

  double g = std::clamp(0.0, lo, hi);
  for (int it = 0; it < kMaxIter; ++it) {
    const auto q = tilted_probs(prior, {g, d, b2_zero});
    const Moments mo = moments(prior.support(), q);
    const double r = mo.mean - u;
    if (std::abs(r) < kMeanTol) return g;
    if (r > 0)
      hi = g;
    else
      lo = g;
    double next = mo.var > 0 ? g - r / mo.var : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(g))) return next;
    g = next;
  }
  throw NumericError("h_inverse: no convergence after 200 iterations");
}

double kl_tilt_vs_prior(const DiscretePrior& prior, double u, double d, double b2_zero) {
  const double g = h_inverse(prior, u, d, b2_zero);
  const TiltParams t{g, d, b2_zero};
  const auto q = tilted_probs(prior, t);
  const auto& s = prior.support();
  double m1 = 0, m2 = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    m1 += q[k] * s[k];
    m2 += q[k] * s[k] * s[k];
  }
  // Evaluate at the attained mean m1 rather than the clamped target.
  return std::max(0.0, m1 * g - b2_zero * 0.5 * d * m2 - c_pi(prior, t));
}

double kl_tilt_grad_u(const DiscretePrior& prior, double u, double d, double b2_zero) {
  const double g = h_inverse(prior, u, d, b2_zero);
  const TiltParams t{g, d, b2_zero};
  const double var = c_ddot(prior, t);
  return g - b2_zero * 0.5 * d * tilt_cov(prior, t, [](double x) { return x * x; }) / var;
}

double product_kl(const DiscretePrior& prior, std::span<const double> u, std::span<const double> d,
                  double b2_zero) {
  if (u.size() != d.size()) throw ShapeError("product_kl: u and d differ in length");
  double total = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    try {
      total += kl_tilt_vs_prior(prior, u[j], d[j], b2_zero);
    } catch (const RangeError& e) {
      throw RangeError("coordinate " + std::to_string(j) + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("coordinate " + std::to_string(j) + ": " + e.what());
    }
  }
  return total;
}

double tilt_quantile(const DiscretePrior& prior, const TiltParams& tilt, double level) {
  if (!(level > 0.0 && level < 1.0)) throw RangeError("tilt_quantile: level must lie in (0, 1)");
  const auto q = tilted_probs(prior, tilt);
  double cum = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    cum += q[k];
    if (cum >= level - 1e-12) return prior.support()[k];
  }
  return prior.max();
}

double tilt_quantile(const DiscretePrior& prior, double u, double d, double b2_zero, double level) {
  return tilt_quantile(prior, {h_inverse(prior, u, d, b2_zero), d, b2_zero}, level);
}

double tilt_cov(const DiscretePrior& prior, const TiltParams& tilt, std::span<const double> f) {
  if (f.size() != prior.size()) throw ShapeError("tilt_cov: f must have one value per support point");
  const auto q = tilted_probs(prior, tilt);
  const auto& s = prior.support();
  double mx = 0, mf = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    mx += q[k] * s[k];
    mf += q[k] * f[k];
  }
  double cov = 0;
  for (std::size_t k = 0; k < q.size(); ++k) cov += q[k] * (f[k] - mf) * (s[k] - mx);
  return cov;
}

double tilt_cov(const DiscretePrior& prior, const TiltParams& tilt,
                const std::function<double(double)>& f) {
  std::vector<double> fv;
  for (double s : prior.support()) fv.push_back(f(s));
  return tilt_cov(prior, tilt, fv);
}

ProductTilt ProductTilt::from_means(const DiscretePrior& prior, std::span<const double> u,
                                    std::span<const double> d, double b2_zero) {
  if (u.size() != d.size()) throw ShapeError("ProductTilt: u and d differ in length");
  ProductTilt pt{prior, {}};
  pt.params.reserve(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    try {
      pt.params.push_back({h_inverse(prior, u[j], d[j], b2_zero), d[j], b2_zero});
    } catch (const RangeError& e) {
      throw RangeError("coordinate " + std::to_string(j) + ": " + e.what());
    }
  }
  return pt;
}

Vector ProductTilt::means() const {
  Vector m(dim());
  for (std::size_t j = 0; j < dim(); ++j) m[j] = c_dot(prior, params[j]);
  return m;
}

std::vector<std::vector<double>> ProductTilt::probability_table() const {
  std::vector<std::vector<double>> t;
  t.reserve(dim());
  for (const auto& par : params) t.push_back(tilted_probs(prior, par));
  return t;
}

std::size_t sample_index(std::span<const double> probs, double uniform) {
  double cum = 0;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    cum += probs[k];
    if (uniform < cum) return k;
  }
  return probs.size() - 1;
}

}  // namespace nmfvi
