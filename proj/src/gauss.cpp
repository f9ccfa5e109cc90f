#include "nmfvi/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nmfvi/parallel.hpp"
#include "nmfvi/rng.hpp"

namespace nmfvi {

void MCConfig::validate() const {
  if (n_samples < 2) throw ParameterError("MCConfig: n_samples must be >= 2");
  if (antithetic && n_samples % 2 != 0)
    throw ParameterError("MCConfig: antithetic sampling needs an even n_samples");
}

namespace {

constexpr Eigen::Index kChunk = 256;

void check_state(const Model& model, const GaussState& s, double v_min) {
  const Eigen::Index p = model.data.p();
  if (s.u.size() != p || s.v.size() != p) throw ShapeError("GaussState dimension does not match the design");
  if (!s.u.allFinite() || !s.v.allFinite()) throw NumericError("GaussState has non-finite entries");
  if ((s.v.array() < v_min).any()) throw ParameterError("GaussState: variance below v_min");
}

struct Sums {
  // Per-sample log-normaliser totals L_s = sum_k b(theta_ks).
  Vector L;
  Vector gu;  // sum_s of the per-sample u-gradient integrand
  Vector gv;
};

// Evaluates L for every sample and, when requested, sums of gradient integrands.
Sums evaluate(const Model& model, const GaussState& st, const Matrix& Z, bool want_grad,
              GradEstimator est) {
  const auto& X = model.data.X;
  const auto& fam = model.family;
  const Eigen::Index S = Z.rows(), p = X.cols(), n = X.rows();
  const Vector xu = X * st.u;
  const Vector sd = st.v.cwiseSqrt();
  const Eigen::Index chunks = (S + kChunk - 1) / kChunk;

  Sums out;
  out.L.resize(S);
  std::vector<Vector> gu(chunks, Vector::Zero(p)), gv(chunks, Vector::Zero(p));
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    const Eigen::Index lo = static_cast<Eigen::Index>(c) * kChunk;
    const Eigen::Index cols = std::min(kChunk, S - lo);
    const Matrix Zt = Z.middleRows(lo, cols).transpose();  // p x cols
    Matrix theta = X * (sd.asDiagonal() * Zt);
    theta.colwise() += xu;
    Matrix deriv;
    if (want_grad && est == GradEstimator::pathwise) deriv.resize(n, cols);
    for (Eigen::Index s = 0; s < cols; ++s) {
      double acc = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        acc += fam.b(theta(k, s));
        if (deriv.size()) deriv(k, s) = fam.b1(theta(k, s));
      }
      out.L[lo + s] = acc;
    }
    if (!want_grad) return;
    if (est == GradEstimator::pathwise) {
      const Matrix G = X.transpose() * deriv;  // p x cols
      gu[c] = G.rowwise().sum();
      gv[c] = G.cwiseProduct(Zt).rowwise().sum();
    } else {
      const Vector Lc = out.L.segment(lo, cols);
      gu[c] = Zt * Lc;
      gv[c] = (Zt.array().square() - 1.0).matrix() * Lc;
    }
  });
  if (want_grad) {
    out.gu = Vector::Zero(p);
    out.gv = Vector::Zero(p);
    for (Eigen::Index c = 0; c < chunks; ++c) {
      out.gu += gu[c];
      out.gv += gv[c];
    }
  }
  return out;
}

double deterministic_part(const Model& model, const GaussState& st) {
  const double p = static_cast<double>(st.u.size());
  const double lin = model.data.y.dot(model.data.X * st.u);
  return lin + 0.5 * st.v.array().log().sum() - 0.5 * (st.v.array() + st.u.array().square()).sum() +
         0.5 * p;
}

Estimate summarize(const Model& model, const GaussState& st, const Vector& L, bool antithetic) {
  const Eigen::Index S = L.size();
  Vector units = L;
  if (antithetic) {
    const Eigen::Index half = S / 2;
    units = 0.5 * (L.head(half) + L.tail(half));
  }
  const double mean = units.mean();
  const double var = units.size() > 1 ? (units.array() - mean).square().sum() / (units.size() - 1) : 0.0;
  Estimate e;
  e.value = deterministic_part(model, st) - mean;
  e.se = std::sqrt(var / units.size());
  e.exact = var == 0;
  return e;
}

}  // namespace

Matrix gauss_base_draws(Eigen::Index p, const MCConfig& cfg) {
  cfg.validate();
  const auto S = static_cast<Eigen::Index>(cfg.n_samples);
  const Eigen::Index fresh = cfg.antithetic ? S / 2 : S;
  Matrix Z(S, p);
  const std::uint64_t base = stream_seed(cfg.seed, Stream::solver);
  for (Eigen::Index s = 0; s < fresh; ++s) {
    CounterRng rng(base, {static_cast<std::uint64_t>(s)});
    for (Eigen::Index j = 0; j < p; ++j) Z(s, j) = rng.normal();
  }
  if (cfg.antithetic) Z.bottomRows(fresh) = -Z.topRows(fresh);
  return Z;
}

Estimate elbo_gauss_mc(const Model& model, const GaussState& state, const MCConfig& cfg, double v_min) {
  require_gaussian(model.prior, "elbo_gauss_mc");
  check_state(model, state, v_min);
  const Matrix Z = gauss_base_draws(model.data.p(), cfg);
  const Sums sums = evaluate(model, state, Z, false, GradEstimator::pathwise);
  return summarize(model, state, sums.L, cfg.antithetic);
}

GaussGradient grad_gauss_mc(const Model& model, const GaussState& state, const MCConfig& cfg,
                            GradEstimator estimator, double v_min) {
  require_gaussian(model.prior, "grad_gauss_mc");
  check_state(model, state, v_min);
  const Matrix Z = gauss_base_draws(model.data.p(), cfg);
  const Sums sums = evaluate(model, state, Z, true, estimator);
  const double S = static_cast<double>(Z.rows());
  const Vector xty = model.data.X.transpose() * model.data.y;
  const Vector sd = state.v.cwiseSqrt();
  GaussGradient g;
  if (estimator == GradEstimator::pathwise) {
    g.du = xty - sums.gu / S - state.u;
    g.dv = -(sums.gv / S).cwiseQuotient(2.0 * sd);
  } else {
    // (sigma - u)/v = z / sqrt(v);  -1/(2v) + (sigma - u)^2/(2v^2) = (z^2 - 1)/(2v)
    g.du = xty - (sums.gu / S).cwiseQuotient(sd) - state.u;
    g.dv = -(sums.gv / S).cwiseQuotient(2.0 * state.v);
  }
  g.dv.array() += 0.5 / state.v.array() - 0.5;
  return g;
}

GaussFit fit_gauss(const Model& model, const MCConfig& cfg, const GaussFitOptions& opt) {
  require_gaussian(model.prior, "fit_gauss");
  validate(model.data, model.family);
  const Eigen::Index p = model.data.p();
  const Matrix Z = gauss_base_draws(p, cfg);
  const Vector xty = model.data.X.transpose() * model.data.y;
  const double S = static_cast<double>(Z.rows());

  // Packed parameters x = (u, v); minimise -M.
  auto unpack = [p](const Vector& x) { return GaussState{x.head(p), x.tail(p)}; };
  ObjectiveWithGradient fg = [&](const Vector& x, Vector& grad) {
    const GaussState st = unpack(x);
    const Sums sums = evaluate(model, st, Z, true, GradEstimator::pathwise);
    const Vector sd = st.v.cwiseSqrt();
    grad.resize(2 * p);
    grad.head(p) = -(xty - sums.gu / S - st.u);
    grad.tail(p) = -(-(sums.gv / S).cwiseQuotient(2.0 * sd) + (0.5 / st.v.array() - 0.5).matrix());
    return -(deterministic_part(model, st) - sums.L.mean());
  };

  Vector x0(2 * p), lower(2 * p), upper(2 * p);
  x0 << Vector::Zero(p), Vector::Ones(p);
  lower << Vector::Constant(p, -std::numeric_limits<double>::infinity()), Vector::Constant(p, opt.v_min);
  upper.setConstant(std::numeric_limits<double>::infinity());

  BoxMinimizerOptions bo;
  bo.max_iter = opt.max_iter;
  bo.memory = opt.memory;
  bo.pg_tol = opt.tol > 0 ? opt.tol : 1e-3 * std::sqrt(static_cast<double>(p));
  const BoxMinimizerResult r = minimize_box(fg, x0, lower, upper, bo);

  GaussFit fit;
  fit.state = unpack(r.x);
  fit.converged = r.converged;
  fit.iterations = r.iterations;
  fit.pg_norm = r.pg_norm;
  for (double f : r.trace) fit.trace.push_back(-f);
  const Sums sums = evaluate(model, fit.state, Z, false, GradEstimator::pathwise);
  fit.elbo = summarize(model, fit.state, sums.L, cfg.antithetic);
  return fit;
}

}  // namespace nmfvi
