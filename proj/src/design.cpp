#include "nmfvi/design.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "nmfvi/rng.hpp"

namespace nmfvi {

namespace {

Vector curvature_weights(const GlmFamily& family, const Matrix& X, const Vector& beta) {
  if (beta.size() != X.cols()) throw ShapeError("beta length does not match the design");
  const Vector theta = X * beta;
  Vector w(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) w[i] = family.b2(theta[i]);
  return w;
}

PowerIterationResult power_iterate(const std::function<Vector(const Vector&)>& apply, Eigen::Index dim,
                                   double tol, int max_iter) {
  PowerIterationResult res;
  if (dim == 0) {
    res.converged = true;
    return res;
  }
  CounterRng rng(0x5eedULL, {0x0917ULL});
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = 1.0 + 0.5 * rng.uniform();
  v.normalize();
  double est = 0;
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    Vector w = apply(v);
    const double norm = w.norm();
    if (norm == 0) {
      res.value = 0;
      res.converged = true;
      return res;
    }
    const bool done = std::abs(norm - est) <= tol * std::max(1.0, norm);
    est = norm;
    v = w / norm;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(res.iterations, max_iter);
  res.value = est;
  return res;
}

std::vector<double> sorted_row_norms_sq(const Matrix& X) {
  std::vector<double> r(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) r[static_cast<std::size_t>(i)] = X.row(i).squaredNorm();
  std::sort(r.begin(), r.end(), std::greater<>());
  return r;
}

std::size_t subset_size(const Matrix& X, double C) {
  if (!(C >= 0)) throw ParameterError("subset size constant C must be non-negative");
  const double k = std::floor(C * static_cast<double>(X.cols()));
  return static_cast<std::size_t>(std::min(k, static_cast<double>(X.rows())));
}

}  // namespace

Matrix build_A(const GlmFamily& family, const Matrix& X, const Vector& beta) {
  const Vector w = curvature_weights(family, X, beta);
  Matrix A = X.transpose() * w.asDiagonal() * X;
  A.diagonal().setZero();
  return A;
}

double trace_A_sq_dense(const GlmFamily& family, const Matrix& X, const Vector& beta) {
  return build_A(family, X, beta).squaredNorm();
}

double trace_A_sq_streaming(const GlmFamily& family, const Matrix& X, const Vector& beta) {
  const Vector w = curvature_weights(family, X, beta);
  double total = 0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const Vector g = X.transpose() * X.col(j).cwiseProduct(w);
    total += g.squaredNorm() - g[j] * g[j];
  }
  return total;
}

double trace_A_sq(const GlmFamily& family, const Matrix& X, const Vector& beta, double dense_cap) {
  const double work = static_cast<double>(X.rows()) * X.cols() * X.cols();
  return work <= dense_cap ? trace_A_sq_dense(family, X, beta) : trace_A_sq_streaming(family, X, beta);
}

PowerIterationResult opnorm(const Matrix& symmetric, double tol, int max_iter) {
  if (symmetric.rows() != symmetric.cols()) throw ShapeError("opnorm: matrix must be square");
  return power_iterate([&](const Vector& v) { return Vector(symmetric * v); }, symmetric.rows(), tol, max_iter);
}

PowerIterationResult opnorm_gram(const Matrix& X, double tol, int max_iter) {
  return power_iterate([&](const Vector& v) { return Vector(X.transpose() * (X * v)); }, X.cols(), tol,
                       max_iter);
}

double entry_tail(const Matrix& X, double delta) {
  return (X.array().abs() > delta).select(X.array().square(), 0.0).sum();
}

double frob_tail(const Matrix& X, double C) {
  const auto norms = sorted_row_norms_sq(X);
  const std::size_t k = subset_size(X, C);
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) s += norms[i];
  return s / static_cast<double>(X.cols());
}

double subset_gram_opnorm_bound(const Matrix& X, double C) {
  return frob_tail(X, C) * static_cast<double>(X.cols());
}

double subset_gram_opnorm_greedy(const Matrix& X, double C) {
  const std::size_t k = subset_size(X, C);
  if (k == 0) return 0;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) idx[static_cast<std::size_t>(i)] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](auto a, auto b) { return X.row(a).squaredNorm() > X.row(b).squaredNorm(); });
  Matrix sub(static_cast<Eigen::Index>(k), X.cols());
  for (std::size_t r = 0; r < k; ++r) sub.row(static_cast<Eigen::Index>(r)) = X.row(idx[r]);
  return opnorm_gram(sub).value;
}

double score_norm(const GlmFamily& family, const Dataset& data) {
  const Vector r = data.y.array() - family.b1(0.0);
  return (data.X.transpose() * r).squaredNorm() / static_cast<double>(data.p());
}

Matrix make_block_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  if (p < 2 || p % 2 != 0) throw ParameterError("block design needs an even p >= 2");
  if (n < 2 * p) throw ParameterError("block design needs n >= 2p (n = " + std::to_string(n) +
                                      ", p = " + std::to_string(p) + ")");
  Matrix X(n, p);
  const double a = 1.0 / static_cast<double>(p);
  X.topRows(p).setConstant(a);
  X.block(p, 0, p, p / 2).setConstant(a);
  X.block(p, p / 2, p, p / 2).setConstant(-a);
  const double sd = 1.0 / std::sqrt(static_cast<double>(n));
  const std::uint64_t base = stream_seed(seed, Stream::design);
  for (Eigen::Index i = 2 * p; i < n; ++i) {
    CounterRng rng(base, {static_cast<std::uint64_t>(i)});
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = sd * rng.normal();
  }
  return X;
}

Matrix make_gaussian_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double scale,
                            const std::optional<Matrix>& covariance) {
  if (n < 1 || p < 1) throw ParameterError("gaussian design needs n, p >= 1");
  if (!(scale > 0)) throw ParameterError("gaussian design scale must be positive");
  Matrix factor;
  if (covariance) {
    if (covariance->rows() != p || covariance->cols() != p) throw ParameterError("covariance must be p x p");
    if (!covariance->isApprox(covariance->transpose(), 1e-12))
      throw ParameterError("covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(*covariance);
    const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-12 * top) throw ParameterError("covariance is not positive semidefinite");
    factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  const double sd = std::sqrt(scale / static_cast<double>(n));
  const std::uint64_t base = stream_seed(seed, Stream::design);
  Matrix X(n, p);
  Vector z(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    CounterRng rng(base, {static_cast<std::uint64_t>(i)});
    for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
    if (covariance)
      X.row(i) = (sd * factor * z).transpose();
    else
      X.row(i) = (sd * z).transpose();
  }
  return X;
}

DiagnosticsReport diagnose(const GlmFamily& family, const Dataset& data, const DiagnosticsOptions& opt) {
  const Matrix& X = data.X;
  const Eigen::Index p = X.cols();
  DiagnosticsReport rep;
  const auto op = opnorm_gram(X);
  rep.opnorm_xtx = op.value;
  rep.opnorm_converged = op.converged;
  rep.max_diag_xtx = p ? X.colwise().squaredNorm().maxCoeff() : 0.0;
  for (double d : opt.deltas) rep.entry_tail.emplace_back(d, entry_tail(X, d));
  for (double C : opt.Cs) {
    rep.frob_tail.emplace_back(C, frob_tail(X, C));
    rep.subset_gram_upper_bound.emplace_back(C, subset_gram_opnorm_bound(X, C));
  }

  std::vector<Vector> probes{Vector::Zero(p), Vector::Ones(p), -Vector::Ones(p)};
  for (int r = 0; r < opt.random_probes; ++r) {
    CounterRng rng(stream_seed(opt.seed, Stream::evaluation), {0xa11ULL, static_cast<std::uint64_t>(r)});
    Vector b(p);
    for (Eigen::Index j = 0; j < p; ++j) b[j] = 2.0 * rng.uniform() - 1.0;
    probes.push_back(b);
  }
  double total = 0;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const double t = trace_A_sq(family, X, probes[k]);
    if (k == 0) rep.trace_A_sq_zero = t;
    rep.trace_A_sq_max = std::max(rep.trace_A_sq_max, t);
    total += t;
  }
  rep.trace_A_probes = static_cast<int>(probes.size());
  rep.trace_A_sq_mean = total / static_cast<double>(probes.size());
  if (data.y.size() == data.n()) rep.score_norm = score_norm(family, data);
  return rep;
}

}  // namespace nmfvi
