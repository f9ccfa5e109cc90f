#pragma once

#include <vector>

#include "nmfvi/glm.hpp"
#include "nmfvi/mc.hpp"
#include "nmfvi/optim.hpp"

namespace nmfvi {

/// Independent Gaussians N(u_i, v_i) approximating a posterior under the
/// standard normal prior.
struct GaussState {
  Vector u;
  Vector v;

  static GaussState standard(Eigen::Index p) { return {Vector::Zero(p), Vector::Ones(p)}; }
};

enum class GradEstimator {
  /// E[b'(<x_k, sigma>) x_k] form; exact derivative of the common-random-number objective.
  pathwise,
  /// E[b(<x_k, sigma>) d log q / d(u, v)] form.
  score_function,
};

struct GaussGradient {
  Vector du;
  Vector dv;
};

/// Fixed standard-normal base draws z (n_samples x p); sigma = u + sqrt(v) * z.
Matrix gauss_base_draws(Eigen::Index p, const MCConfig& cfg);

/// M(u, v) = sum_k y_k <x_k, u> - sum_k E b(<x_k, sigma>) + (1/2) sum log v_i
///           - sum (v_i + u_i^2)/2 + p/2.
Estimate elbo_gauss_mc(const Model& model, const GaussState& state, const MCConfig& cfg,
                       double v_min = 1e-6);

GaussGradient grad_gauss_mc(const Model& model, const GaussState& state, const MCConfig& cfg,
                            GradEstimator estimator = GradEstimator::pathwise, double v_min = 1e-6);

struct GaussFitOptions {
  double v_min = 1e-6;
  int max_iter = 500;
  /// Projected-gradient tolerance; negative selects 1e-3 * sqrt(p).
  double tol = -1.0;
  int memory = 10;
};

struct GaussFit {
  GaussState state;
  Estimate elbo;
  bool converged = false;
  int iterations = 0;
  double pg_norm = 0;
  /// M after each optimizer iteration.
  std::vector<double> trace;
};

/// Maximises the common-random-number estimate of M over u and v >= v_min,
/// starting from u = 0, v = 1.
GaussFit fit_gauss(const Model& model, const MCConfig& cfg, const GaussFitOptions& opt = {});

}  // namespace nmfvi
