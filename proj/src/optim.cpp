#include "nmfvi/optim.hpp"

#include <cmath>
#include <deque>

namespace nmfvi {

namespace {

Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

struct Pair {
  Vector s, y;
  double rho;
};

}  // namespace

double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper) {
  return (project(x - g, lower, upper) - x).lpNorm<Eigen::Infinity>();
}

BoxMinimizerResult minimize_box(const ObjectiveWithGradient& fg, Vector x0, const Vector& lower,
                                const Vector& upper, const BoxMinimizerOptions& opt) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw ShapeError("minimize_box: bound sizes differ from x0");
  if ((lower.array() > upper.array()).any()) throw ParameterError("minimize_box: lower > upper");

  BoxMinimizerResult res;
  Vector x = project(x0, lower, upper);
  Vector g(n);
  double f = fg(x, g);
  ++res.evaluations;
  if (!std::isfinite(f) || !g.allFinite()) throw NumericError("minimize_box: non-finite objective at start");
  res.trace.push_back(f);

  std::deque<Pair> memory;
  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    res.pg_norm = projected_gradient_norm(x, g, lower, upper);
    if (res.pg_norm < opt.pg_tol) {
      res.converged = true;
      res.message = "projected gradient below tolerance";
      break;
    }

    Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
    for (Eigen::Index i = 0; i < n; ++i)
      free[i] = !((x[i] <= lower[i] && g[i] > 0) || (x[i] >= upper[i] && g[i] < 0));
    auto mask = [&](const Vector& v) { return Vector(free.select(v, Vector::Zero(n))); };

    // Two-loop recursion restricted to the free variables.
    Vector q = mask(g);
    std::vector<double> alpha(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      alpha[k] = memory[k].rho * mask(memory[k].s).dot(q);
      q -= alpha[k] * mask(memory[k].y);
    }
    if (!memory.empty()) {
      const Vector sF = mask(memory.back().s), yF = mask(memory.back().y);
      const double yy = yF.squaredNorm();
      if (yy > 0 && sF.dot(yF) > 0) q *= sF.dot(yF) / yy;
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const double beta = memory[k].rho * mask(memory[k].y).dot(q);
      q += (alpha[k] - beta) * mask(memory[k].s);
    }
    Vector dir = -mask(q);
    double step = 1.0;
    if (!(g.dot(dir) < 0)) {
      memory.clear();
      dir = -mask(g);
    }
    if (memory.empty()) step = std::min(1.0, 1.0 / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300));

    // Projected Armijo backtracking.
    Vector x_new(n), g_new(n);
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      x_new = project(x + step * dir, lower, upper);
      f_new = fg(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= f + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      res.message = "line search failed";
      break;
    }

    Vector s = x_new - x, y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * y.squaredNorm()) {
      memory.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(memory.size()) > opt.memory) memory.pop_front();
    }
    const double decrease = f - f_new;
    x = x_new;
    g = g_new;
    f = f_new;
    res.trace.push_back(f);
    if (decrease <= opt.f_rel_tol * std::max(1.0, std::abs(f))) {
      res.pg_norm = projected_gradient_norm(x, g, lower, upper);
      res.converged = res.pg_norm < opt.pg_tol;
      res.message = "relative objective decrease below tolerance";
      ++res.iterations;
      break;
    }
  }
  if (res.iterations >= opt.max_iter && !res.converged) {
    res.pg_norm = projected_gradient_norm(x, g, lower, upper);
    res.converged = res.pg_norm < opt.pg_tol;
    if (res.message.empty()) res.message = "iteration cap reached";
  }
  res.x = x;
  res.f = f;
  return res;
}

}  // namespace nmfvi
