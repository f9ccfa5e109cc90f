#pragma once

#include <vector>

#include "nmfvi/glm.hpp"
#include "nmfvi/mc.hpp"
#include "nmfvi/tilt.hpp"

namespace nmfvi {

/// Iterate of the discrete-prior mean-field fixed point. Coordinate j of the
/// variational measure is the tilt pi_(v_j, d_j) whose mean is u_j.
struct TiltState {
  Vector u;
  Vector v;
  Vector d;
};

/// d_j = (X^T X)_jj
Vector tilt_scales(const Matrix& X);

/// State with means u (v = h(u, d)).
TiltState make_tilt_state(const Model& model, const Vector& u);

/// Conditional log-normaliser increments
///   f_j(s) = E[ sum_i b(x_i^T sigma) - b(x_i^T sigma_{0,j}) | sigma_j = s ],
/// one value per support point, with standard errors (zero when enumerated).
struct FjEstimate {
  std::vector<double> values;
  std::vector<double> se;
};

/// f_j for every coordinate from one set of joint draws sigma ~ Q. The same
/// draws serve every support point and every iteration, so differences in s
/// carry little noise and the update map is deterministic.
std::vector<FjEstimate> f_estimates(const Model& model, const TiltState& state, const MCConfig& cfg);
FjEstimate f_j_estimate(const Model& model, const TiltState& state, std::size_t j, const MCConfig& cfg);

/// Undamped right-hand side of the stationarity condition for v:
///   sum_i y_i x_ij - Cov(f_j, sigma_j)/c'' + b''(0) (d_j/2) Cov(sigma_j^2, sigma_j)/c''.
Vector stationarity_rhs(const Model& model, const TiltState& state, const MCConfig& cfg);

/// One Jacobi sweep: v <- (1 - damping) v + damping * rhs(u), u <- c_dot(v, d).
TiltState tilt_update(const Model& model, const TiltState& state, const MCConfig& cfg, double damping);

/// ||v - rhs(u)||_inf
double stationarity_residual(const Model& model, const TiltState& state, const MCConfig& cfg);

/// E_{Q_u}[H] - KL(Q_u || pi_p). KL and the linear part are exact; the
/// log-normaliser part is exact for the linear family or when enumeration is
/// within cfg.enumeration_cap, and Monte Carlo otherwise.
Estimate elbo_tilt(const Model& model, const Vector& u, const Vector& d, const MCConfig& cfg);

struct TiltFitOptions {
  double damping = 0.5;
  int max_iter = 500;
  double tol_u = 1e-5;
  /// Record the ELBO of every iterate (costs one evaluation per iteration).
  bool trace_elbo = true;
  /// Starting means; empty selects u = 0 (clamped into the support hull).
  Vector u0;
};

struct TiltTraceEntry {
  Vector u;
  Vector v;
  double elbo = 0;
};

struct TiltFit {
  TiltState state;
  bool converged = false;
  int iterations = 0;
  /// trace[0] is the starting point.
  std::vector<TiltTraceEntry> trace;
};

/// Iterates tilt_update from u0 until ||u^{t+1} - u^t||_inf < tol_u. Without
/// convergence the state is the traced iterate with the largest ELBO (the last
/// iterate when trace_elbo is off).
TiltFit fit_tilt(const Model& model, const MCConfig& cfg, const TiltFitOptions& opt = {});

/// Multi-start surrogate for a well-separated maximiser: reruns fit_tilt from
/// random starts in the support hull and reports the largest pairwise
/// ||u - u'||^2 / p. This is an empirical probe, not a certificate.
struct SeparationProbe {
  double max_pairwise_sq_dist = 0;
  bool multimodality_detected = false;
  std::vector<Vector> fitted_means;
};

SeparationProbe well_separation_probe(const Model& model, const MCConfig& cfg, const TiltFitOptions& opt,
                                      int starts = 10, std::uint64_t seed = 0, double threshold = 0.01);

}  // namespace nmfvi
