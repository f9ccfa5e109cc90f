#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nmfvi/glm.hpp"

namespace nmfvi {

/// A_beta = X^T D_beta X - diag(X^T D_beta X), D_beta = diag(b''(x_i^T beta)).
Matrix build_A(const GlmFamily& family, const Matrix& X, const Vector& beta);

/// Tr(A_beta^2) = ||A_beta||_F^2. Dense when n p^2 is within `dense_cap`,
/// otherwise accumulated one Gram column at a time.
double trace_A_sq(const GlmFamily& family, const Matrix& X, const Vector& beta,
                  double dense_cap = 5e7);
double trace_A_sq_dense(const GlmFamily& family, const Matrix& X, const Vector& beta);
double trace_A_sq_streaming(const GlmFamily& family, const Matrix& X, const Vector& beta);

struct PowerIterationResult {
  double value = 0;
  int iterations = 0;
  bool converged = false;
};

/// Largest absolute eigenvalue of a symmetric operator by power iteration
/// (tolerance 1e-8 on the Rayleigh quotient, 1000 iterations).
PowerIterationResult opnorm(const Matrix& symmetric, double tol = 1e-8, int max_iter = 1000);
/// ||X^T X||_op without forming the Gram matrix.
PowerIterationResult opnorm_gram(const Matrix& X, double tol = 1e-8, int max_iter = 1000);

/// sum_ij x_ij^2 1{|x_ij| > delta}
double entry_tail(const Matrix& X, double delta);

/// (1/p) max_{|S| <= C p} sum_{i in S} ||x_i||^2 (top row norms).
double frob_tail(const Matrix& X, double C);

/// Upper bound on max_{|S| <= Cp} ||sum_{i in S} x_i x_i^T||_op via the
/// floor(Cp) largest squared row norms.
double subset_gram_opnorm_bound(const Matrix& X, double C);
/// Operator norm of the Gram matrix of the floor(Cp) rows with largest norm
/// (a lower bound on the same supremum).
double subset_gram_opnorm_greedy(const Matrix& X, double C);

/// ||X^T (y - b'(0) 1)||^2 / p
double score_norm(const GlmFamily& family, const Dataset& data);

/// Rows 1..p equal 1_p/p; rows p+1..2p equal (1_{p/2}, -1_{p/2})/p; the rest iid N(0, I_p/n).
Matrix make_block_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed);

/// Rows iid N(0, Sigma_p / n). With no covariance the rows are N(0, scale I_p / n).
Matrix make_gaussian_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double scale = 1.0,
                            const std::optional<Matrix>& covariance = std::nullopt);

struct DiagnosticsReport {
  double opnorm_xtx = 0;
  bool opnorm_converged = false;
  double max_diag_xtx = 0;
  std::vector<std::pair<double, double>> entry_tail;  // (delta, value)
  std::vector<std::pair<double, double>> frob_tail;   // (C, value)
  std::vector<std::pair<double, double>> subset_gram_upper_bound;  // (C, value)
  double trace_A_sq_zero = 0;
  double trace_A_sq_max = 0;    // over all probes
  double trace_A_sq_mean = 0;   // over all probes
  int trace_A_probes = 0;
  double score_norm = 0;
};

struct DiagnosticsOptions {
  std::vector<double> deltas{0.01, 0.05, 0.1, 0.5};
  std::vector<double> Cs{0.5, 1.0, 2.0};
  /// beta probes: 0, +1 and -1 corners, plus this many uniform draws on [-1,1]^p.
  int random_probes = 20;
  std::uint64_t seed = 0;
};

DiagnosticsReport diagnose(const GlmFamily& family, const Dataset& data, const DiagnosticsOptions& opt = {});

}  // namespace nmfvi
