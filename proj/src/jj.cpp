#include "nmfvi/jj.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nmfvi/rng.hpp"

namespace nmfvi {

namespace {

void require_logistic(const Model& model, const char* what) {
  if (model.family.kind() != FamilyKind::logistic)
    throw UnsupportedError(std::string(what) + " is defined for the logistic family only");
}

void check_prior(const GaussianPrior& prior, Eigen::Index p) {
  if (prior.mean.size() != p || prior.cov.rows() != p || prior.cov.cols() != p)
    throw ShapeError("Gaussian prior dimension does not match the design");
}

Eigen::LLT<Matrix> spd_factor(const Matrix& A, const char* what) {
  Eigen::LLT<Matrix> llt(0.5 * (A + A.transpose()));
  if (llt.info() != Eigen::Success) throw NumericError(std::string(what) + ": matrix is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double log_sigmoid(double x) { return -detail::softplus(-x); }

struct Posterior {
  Eigen::LLT<Matrix> precision;
  Vector u;
  Matrix Sigma;
  Vector rhs;  // precision * u
};

// Gaussian surrogate posterior for tangent points xi.
Posterior surrogate(const Model& model, const Vector& xi, const GaussianPrior& prior) {
  const auto& X = model.data.X;
  const Eigen::Index p = X.cols(), n = X.rows();
  const auto prior_llt = spd_factor(prior.cov, "prior covariance");
  const Matrix prior_prec = prior_llt.solve(Matrix::Identity(p, p));

  Vector lam(n);
  for (Eigen::Index i = 0; i < n; ++i) lam[i] = lambda_fn(xi[i]);
  Matrix P = prior_prec;
  P.noalias() += 2.0 * X.transpose() * lam.asDiagonal() * X;

  Posterior post{spd_factor(P, "jj_step precision"), {}, {}, {}};
  post.rhs = prior_prec * prior.mean + X.transpose() * (model.data.y.array() - 0.5).matrix();
  post.u = post.precision.solve(post.rhs);
  post.Sigma = post.precision.solve(Matrix::Identity(p, p));
  post.Sigma = 0.5 * (post.Sigma + post.Sigma.transpose()).eval();
  return post;
}

}  // namespace

double lambda_fn(double x) {
  if (!(x >= 0)) throw RangeError("lambda_fn: argument must be non-negative");
  if (x < 1e-4) return 0.125 - x * x / 96.0;
  return std::tanh(0.5 * x) / (4.0 * x);
}

JJState jj_initial(const Model& model, const GaussianPrior& prior) {
  check_prior(prior, model.data.p());
  return {prior.mean, prior.cov, Vector::Ones(model.data.n())};
}

JJState jj_step(const Model& model, const JJState& state, const GaussianPrior& prior) {
  require_logistic(model, "jj_step");
  check_prior(prior, model.data.p());
  if (state.xi.size() != model.data.n()) throw ShapeError("jj_step: xi needs one entry per observation");
  Posterior post = surrogate(model, state.xi, prior);
  const auto& X = model.data.X;
  JJState next{post.u, post.Sigma, Vector(X.rows())};
  const Matrix XS = X * post.Sigma;
  const Vector Xu = X * post.u;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    next.xi[i] = std::sqrt(std::max(0.0, XS.row(i).dot(X.row(i)) + Xu[i] * Xu[i]));
  return next;
}

double jj_bound(const Model& model, const Vector& xi, const GaussianPrior& prior) {
  require_logistic(model, "jj_bound");
  check_prior(prior, model.data.p());
  const Posterior post = surrogate(model, xi, prior);
  const auto prior_llt = spd_factor(prior.cov, "prior covariance");
  double local = 0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    const double l = lambda_fn(xi[i]);
    local += log_sigmoid(xi[i]) - 0.5 * xi[i] + l * xi[i] * xi[i];
  }
  // The family's b carries -log 2 per observation relative to log(1 + e^t).
  local += static_cast<double>(xi.size()) * std::numbers::ln2;
  const double quad_post = post.u.dot(post.rhs);
  const double quad_prior = prior.mean.dot(prior_llt.solve(prior.mean));
  return local + 0.5 * (-log_det(post.precision) - log_det(prior_llt)) + 0.5 * quad_post - 0.5 * quad_prior;
}

JJFit fit_jj(const Model& model, const GaussianPrior& prior, const JJFitOptions& opt) {
  require_logistic(model, "fit_jj");
  validate(model.data, model.family);
  JJFit fit;
  fit.state = jj_initial(model, prior);
  for (int t = 1; t <= opt.max_iter; ++t) {
    fit.bound_trace.push_back(jj_bound(model, fit.state.xi, prior));
    JJState next = jj_step(model, fit.state, prior);
    const double change = (next.xi - fit.state.xi).lpNorm<Eigen::Infinity>();
    fit.state = std::move(next);
    fit.iterations = t;
    if (change < opt.tol_xi) {
      fit.converged = true;
      break;
    }
  }
  fit.bound_trace.push_back(jj_bound(model, fit.state.xi, prior));
  return fit;
}

double gaussian_kl(const Vector& m1, const Matrix& S1, const Vector& m0, const Matrix& S0) {
  const Eigen::Index p = m1.size();
  const auto l0 = spd_factor(S0, "KL reference covariance");
  const auto l1 = spd_factor(S1, "KL covariance");
  const Vector dm = m0 - m1;
  return 0.5 * (l0.solve(S1).trace() + dm.dot(l0.solve(dm)) - static_cast<double>(p) + log_det(l0) -
                log_det(l1));
}

Estimate jj_objective_mc(const Model& model, const JJState& state, const GaussianPrior& prior,
                         const MCConfig& cfg) {
  cfg.validate();
  const auto& X = model.data.X;
  const Eigen::Index p = X.cols(), n = X.rows();
  check_prior(prior, p);
  const auto llt = spd_factor(state.Sigma, "jj_objective_mc covariance");
  const Matrix L = llt.matrixL();
  const auto S = static_cast<Eigen::Index>(cfg.n_samples);
  const Eigen::Index fresh = cfg.antithetic ? S / 2 : S;
  const std::uint64_t base = stream_seed(cfg.seed, Stream::evaluation);
  Matrix Z(p, S);
  for (Eigen::Index s = 0; s < fresh; ++s) {
    CounterRng rng(base, {0x1177ULL, static_cast<std::uint64_t>(s)});
    for (Eigen::Index j = 0; j < p; ++j) Z(j, s) = rng.normal();
  }
  if (cfg.antithetic) Z.rightCols(fresh) = -Z.leftCols(fresh);
  const Vector xu = X * state.u;
  Vector h(S);
  for (Eigen::Index lo = 0; lo < S; lo += 1024) {
    const Eigen::Index cols = std::min<Eigen::Index>(1024, S - lo);
    Matrix theta = X * (L * Z.middleCols(lo, cols));
    theta.colwise() += xu;
    for (Eigen::Index s = 0; s < cols; ++s) {
      double acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) acc += model.data.y[i] * theta(i, s) - model.family.b(theta(i, s));
      h[lo + s] = acc;
    }
  }
  Vector units = h;
  if (cfg.antithetic) units = 0.5 * (h.head(fresh) + h.tail(fresh));
  const double mean = units.mean();
  const double var = (units.array() - mean).square().sum() / static_cast<double>(units.size() - 1);
  Estimate e;
  e.value = mean - gaussian_kl(state.u, state.Sigma, prior.mean, prior.cov);
  e.se = std::sqrt(var / static_cast<double>(units.size()));
  return e;
}

}  // namespace nmfvi
