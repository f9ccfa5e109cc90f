#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nmfvi/glm.hpp"

namespace nmfvi {

struct BoxMinimizerOptions {
  int memory = 10;
  int max_iter = 500;
  /// Stop when the projected gradient ||P(x - g) - x||_inf falls below this.
  double pg_tol = 1e-5;
  /// Relative objective decrease below which the run stops (not converged).
  double f_rel_tol = 1e-15;
  int max_backtracks = 40;
};

struct BoxMinimizerResult {
  Vector x;
  double f = 0;
  double pg_norm = 0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
  /// Objective after each accepted iteration (index 0 is the start point).
  std::vector<double> trace;
};

/// Objective callback: returns f(x) and writes the gradient into `grad`.
using ObjectiveWithGradient = std::function<double(const Vector& x, Vector& grad)>;

/// Limited-memory quasi-Newton minimisation on a box [lower, upper]
/// (entries may be +-infinity). Variables pinned at a bound with the
/// gradient pointing outward are held fixed; the L-BFGS two-loop direction
/// acts on the free set and steps are projected back onto the box with an
/// Armijo backtracking search.
BoxMinimizerResult minimize_box(const ObjectiveWithGradient& fg, Vector x0, const Vector& lower,
                                const Vector& upper, const BoxMinimizerOptions& opt = {});

/// ||P(x - g) - x||_inf
double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper);

}  // namespace nmfvi
