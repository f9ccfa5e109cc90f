#pragma once

#include <vector>

#include "nmfvi/glm.hpp"
#include "nmfvi/mc.hpp"

namespace nmfvi {

/// lambda(x) = (1/(2x)) (1/(1+e^{-x}) - 1/2), with lambda(0) = 1/8.
double lambda_fn(double x);

/// Gaussian prior N(mean, cov) for the tangent-bound algorithm.
struct GaussianPrior {
  Vector mean;
  Matrix cov;

  static GaussianPrior standard(Eigen::Index p) { return {Vector::Zero(p), Matrix::Identity(p, p)}; }
};

/// N(u, Sigma) plus the tangent points xi (one per observation).
struct JJState {
  Vector u;
  Matrix Sigma;
  Vector xi;
};

/// State at the prior with xi = 1.
JJState jj_initial(const Model& model, const GaussianPrior& prior);

/// One sweep of the tangent-bound updates:
///   Sigma^{-1} = Sigma0^{-1} + 2 sum_i lambda(xi_i) x_i x_i^T
///   u = Sigma (Sigma0^{-1} u0 + sum_i (y_i - 1/2) x_i)
///   xi_i = sqrt(x_i^T (Sigma + u u^T) x_i)
JJState jj_step(const Model& model, const JJState& state, const GaussianPrior& prior);

/// Closed-form evidence lower bound of the quadratic surrogate at tangent points xi.
double jj_bound(const Model& model, const Vector& xi, const GaussianPrior& prior);

struct JJFitOptions {
  double tol_xi = 1e-8;
  int max_iter = 1000;
};

struct JJFit {
  JJState state;
  bool converged = false;
  int iterations = 0;
  /// jj_bound at xi^0, xi^1, ...
  std::vector<double> bound_trace;
};

JJFit fit_jj(const Model& model, const GaussianPrior& prior, const JJFitOptions& opt = {});

/// E_{N(u,Sigma)}[H] - KL(N(u,Sigma) || prior); KL in closed form, E[H] by
/// Monte Carlo on sigma = u + L z with fixed base draws.
Estimate jj_objective_mc(const Model& model, const JJState& state, const GaussianPrior& prior,
                         const MCConfig& cfg);

/// KL(N(m1, S1) || N(m0, S0)).
double gaussian_kl(const Vector& m1, const Matrix& S1, const Vector& m0, const Matrix& S0);

}  // namespace nmfvi
