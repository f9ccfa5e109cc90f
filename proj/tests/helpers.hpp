#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "nmfvi/glm.hpp"
#include "nmfvi/rng.hpp"

namespace testutil {

using nmfvi::Matrix;
using nmfvi::Vector;

inline Matrix random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double scale = 1.0) {
  nmfvi::CounterRng rng(seed, {0x7e57ULL});
  Matrix X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = scale * rng.normal();
  return X;
}

inline Vector random_vector(Eigen::Index p, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  nmfvi::CounterRng rng(seed, {0x7e58ULL});
  Vector v(p);
  for (Eigen::Index j = 0; j < p; ++j) v[j] = lo + (hi - lo) * rng.uniform();
  return v;
}

inline Vector random_binary(Eigen::Index n, std::uint64_t seed) {
  nmfvi::CounterRng rng(seed, {0x7e59ULL});
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  return y;
}

inline nmfvi::DiscretePrior default_prior() { return nmfvi::DiscretePrior::three_point(0.2, 0.6, 0.2); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// log of the integral of exp(f) against N(0, I_p), p in {1, 2}, by a trapezoid
// rule on [-L, L]^p. Independent of the library quadrature.
inline double grid_log_gauss_integral(int p, const std::function<double(const Vector&)>& f, int m = 1601,
                                      double L = 10.0) {
  const double h = 2 * L / (m - 1);
  std::vector<double> logs;
  Vector b(p);
  auto node = [&](int k) { return -L + h * k; };
  auto lw = [&](double x) { return -0.5 * x * x - 0.5 * std::log(2 * std::numbers::pi) + std::log(h); };
  if (p == 1) {
    for (int a = 0; a < m; ++a) {
      b[0] = node(a);
      logs.push_back(f(b) + lw(b[0]));
    }
  } else {
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c) {
        b[0] = node(a);
        b[1] = node(c);
        logs.push_back(f(b) + lw(b[0]) + lw(b[1]));
      }
  }
  double mx = -1e300;
  for (double v : logs) mx = std::max(mx, v);
  double s = 0;
  for (double v : logs) s += std::exp(v - mx);
  return mx + std::log(s);
}

// Brute-force walk over every configuration of a discrete prior; calls
// visit(beta values, log prior mass, H(beta)) with H computed by plain loops.
inline void brute_force(const nmfvi::Model& m,
                        const std::function<void(const Vector&, double, double)>& visit) {
  const auto& pr = std::get<nmfvi::DiscretePrior>(m.prior);
  const auto p = m.data.p();
  const std::size_t K = pr.size();
  std::size_t total = 1;
  for (Eigen::Index j = 0; j < p; ++j) total *= K;
  Vector beta(p);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    double lp = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      beta[j] = pr.support()[c % K];
      lp += std::log(pr.probs()[c % K]);
      c /= K;
    }
    double h = 0;
    for (Eigen::Index i = 0; i < m.data.n(); ++i) {
      double t = 0;
      for (Eigen::Index j = 0; j < p; ++j) t += m.data.X(i, j) * beta[j];
      h += m.data.y[i] * t - m.family.b(t);
    }
    visit(beta, lp, h);
  }
}

inline double brute_logz(const nmfvi::Model& m) {
  std::vector<double> terms;
  brute_force(m, [&](const Vector&, double lp, double h) { terms.push_back(lp + h); });
  double mx = -1e300;
  for (double v : terms) mx = std::max(mx, v);
  double s = 0;
  for (double v : terms) s += std::exp(v - mx);
  return mx + std::log(s);
}

inline Vector brute_mean(const nmfvi::Model& m) {
  const double lz = brute_logz(m);
  Vector mean = Vector::Zero(m.data.p());
  brute_force(m, [&](const Vector& b, double lp, double h) { mean += std::exp(lp + h - lz) * b; });
  return mean;
}

inline nmfvi::Model discrete_model(const nmfvi::GlmFamily& fam, Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                                   double scale = 0.6) {
  Matrix X = random_matrix(n, p, seed, scale);
  Vector y(n);
  nmfvi::CounterRng rng(seed, {0xabcULL});
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fam.kind() == nmfvi::FamilyKind::linear)
      y[i] = rng.normal();
    else
      y[i] = std::floor(rng.uniform() * (fam.trials() + 1));
  }
  return {fam, {X, y}, default_prior()};
}

// Tilted pmf with mean u at scale d, by bisection on the natural parameter.
inline std::vector<double> tilt_pmf(const nmfvi::DiscretePrior& pr, double u, double d, double b2z) {
  auto pmf = [&](double g) {
    std::vector<double> w(pr.size());
    double z = 0;
    for (std::size_t k = 0; k < pr.size(); ++k) {
      const double s = pr.support()[k];
      z += (w[k] = pr.probs()[k] * std::exp(g * s - b2z * 0.5 * d * s * s));
    }
    for (auto& v : w) v /= z;
    return w;
  };
  auto mean = [&](const std::vector<double>& w) {
    double m = 0;
    for (std::size_t k = 0; k < w.size(); ++k) m += w[k] * pr.support()[k];
    return m;
  };
  double lo = -80, hi = 80;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean(pmf(mid)) < u ? lo : hi) = mid;
  }
  return pmf(0.5 * (lo + hi));
}

// Exact E_Q[H] - KL(Q || prior) over the product of tilts with means u.
inline double exact_nmf_objective(const nmfvi::Model& m, const Vector& u) {
  const auto& pr = std::get<nmfvi::DiscretePrior>(m.prior);
  const Vector d = m.data.X.colwise().squaredNorm().transpose();
  const double b2z = m.family.b2_at_zero();
  std::vector<std::vector<double>> q;
  double kl = 0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    q.push_back(tilt_pmf(pr, u[j], d[j], b2z));
    for (std::size_t k = 0; k < pr.size(); ++k) kl += q.back()[k] * std::log(q.back()[k] / pr.probs()[k]);
  }
  double eh = 0;
  brute_force(m, [&](const Vector& b, double, double h) {
    double w = 1;
    for (Eigen::Index j = 0; j < b.size(); ++j) w *= q[static_cast<std::size_t>(j)][pr.index_of(b[j])];
    eh += w * h;
  });
  return eh - kl;
}

}  // namespace testutil
