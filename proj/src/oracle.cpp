#include "nmfvi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nmfvi/parallel.hpp"

namespace nmfvi {

namespace {

struct LogSumExp {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0;

  void add(double x) {
    if (x <= max) {
      sum += std::exp(x - max);
    } else {
      sum = sum * std::exp(max - x) + 1.0;
      max = x;
    }
  }
  void merge(const LogSumExp& o) {
    if (o.sum == 0) return;
    if (sum == 0) {
      *this = o;
      return;
    }
    if (o.max <= max) {
      sum += o.sum * std::exp(o.max - max);
    } else {
      sum = sum * std::exp(max - o.max) + o.sum;
      max = o.max;
    }
  }
  double value() const { return max + std::log(sum); }
};

double sum_b(const GlmFamily& f, const Vector& theta) {
  double s = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) s += f.b(theta[i]);
  return s;
}

// log pi_p(beta) + H(beta) for a configuration, given X^T y.
struct LogWeight {
  const GlmFamily& family;
  const DiscretePrior& prior;
  Vector xty;

  double operator()(const std::vector<std::size_t>& digits, const Vector& theta) const {
    const auto& s = prior.support();
    const auto& lp = prior.log_probs();
    double w = 0;
    for (std::size_t j = 0; j < digits.size(); ++j) w += lp[digits[j]] + xty[j] * s[digits[j]];
    return w - sum_b(family, theta);
  }
};

LogSumExp logz_blocks(const ConfigurationWalker& walker, const LogWeight& lw) {
  std::vector<LogSumExp> partial(walker.levels());
  parallel_for(walker.levels(), [&](std::size_t t) {
    walker.walk_block(t, [&](const auto& digits, const Vector& theta) {
      partial[t].add(lw(digits, theta));
    });
  });
  LogSumExp total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace

std::size_t enumeration_size(std::size_t levels, Eigen::Index p, std::size_t cap) {
  const double total = std::pow(static_cast<double>(levels), static_cast<double>(p));
  if (total > static_cast<double>(cap))
    throw CapacityError("exact enumeration needs " + std::to_string(levels) + "^" + std::to_string(p) +
                        " configurations; the cap is " + std::to_string(cap));
  return static_cast<std::size_t>(total);
}

ConfigurationWalker::ConfigurationWalker(const Matrix& X, const std::vector<double>& support)
    : X_(X), support_(support) {
  if (X.cols() < 1) throw ParameterError("enumeration needs p >= 1");
}

void ConfigurationWalker::walk_block(
    std::size_t top,
    const std::function<void(const std::vector<std::size_t>&, const Vector&)>& visit) const {
  const auto p = static_cast<std::size_t>(X_.cols());
  const std::size_t m = support_.size();
  std::vector<std::size_t> digits(p, 0);
  digits[p - 1] = top;
  Vector theta = Vector::Zero(X_.rows());
  for (std::size_t j = 0; j < p; ++j) theta += X_.col(static_cast<Eigen::Index>(j)) * support_[digits[j]];

  // Periodic full recompute keeps rounding drift of the rank-one updates bounded.
  std::size_t steps = 0;
  while (true) {
    visit(digits, theta);
    std::size_t j = 0;
    for (; j + 1 < p; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      if (digits[j] + 1 < m) {
        theta += X_.col(col) * (support_[digits[j] + 1] - support_[digits[j]]);
        ++digits[j];
        break;
      }
      theta += X_.col(col) * (support_[0] - support_[digits[j]]);
      digits[j] = 0;
    }
    if (j + 1 >= p) return;
    if (++steps % 4096 == 0) {
      theta.setZero();
      for (std::size_t k = 0; k < p; ++k)
        theta += X_.col(static_cast<Eigen::Index>(k)) * support_[digits[k]];
    }
  }
}

void ConfigurationWalker::walk(
    const std::function<void(const std::vector<std::size_t>&, const Vector&)>& visit) const {
  for (std::size_t t = 0; t < support_.size(); ++t) walk_block(t, visit);
}

double enumerate_logz(const Model& model, std::size_t cap) {
  const auto& prior = require_discrete(model.prior, "enumerate_logz");
  enumeration_size(prior.size(), model.data.p(), cap);
  ConfigurationWalker walker(model.data.X, prior.support());
  LogWeight lw{model.family, prior, model.data.X.transpose() * model.data.y};
  return logz_blocks(walker, lw).value();
}

PosteriorSummary enumerate_posterior(const Model& model, std::size_t cap) {
  const auto& prior = require_discrete(model.prior, "enumerate_posterior");
  enumeration_size(prior.size(), model.data.p(), cap);
  ConfigurationWalker walker(model.data.X, prior.support());
  LogWeight lw{model.family, prior, model.data.X.transpose() * model.data.y};
  const double log_z = logz_blocks(walker, lw).value();

  const auto p = static_cast<std::size_t>(model.data.p());
  const std::size_t m = prior.size();
  std::vector<std::vector<std::vector<double>>> partial(
      m, std::vector<std::vector<double>>(p, std::vector<double>(m, 0.0)));
  parallel_for(m, [&](std::size_t t) {
    auto& acc = partial[t];
    walker.walk_block(t, [&](const auto& digits, const Vector& theta) {
      const double w = std::exp(lw(digits, theta) - log_z);
      for (std::size_t j = 0; j < p; ++j) acc[j][digits[j]] += w;
    });
  });

  PosteriorSummary out;
  out.log_z = log_z;
  out.marginals.assign(p, std::vector<double>(m, 0.0));
  out.mean = Vector::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < m; ++k) out.marginals[j][k] += partial[t][j][k];
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < m; ++k)
      out.mean[static_cast<Eigen::Index>(j)] += out.marginals[j][k] * prior.support()[k];
  return out;
}

std::vector<double> enumerate_joint_posterior(const Model& model, std::size_t cap) {
  const auto& prior = require_discrete(model.prior, "enumerate_joint_posterior");
  const std::size_t total = enumeration_size(prior.size(), model.data.p(), cap);
  ConfigurationWalker walker(model.data.X, prior.support());
  LogWeight lw{model.family, prior, model.data.X.transpose() * model.data.y};
  std::vector<double> logw;
  logw.reserve(total);
  walker.walk([&](const auto& digits, const Vector& theta) { logw.push_back(lw(digits, theta)); });
  LogSumExp acc;
  for (double v : logw) acc.add(v);
  const double log_z = acc.value();
  for (double& v : logw) v = std::exp(v - log_z);
  return logw;
}

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw ParameterError("gauss_hermite: need at least one node");
  // Golub-Welsch for starting nodes, then Newton on the orthonormal recurrence.
  Matrix J = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(J, Eigen::EigenvaluesOnly);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double p0 = std::pow(std::numbers::pi, -0.25);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()[i];
    double pn = 0, pn1 = 0;
    for (int it = 0; it < 20; ++it) {
      double a = p0, b = 0;
      for (int k = 0; k < n; ++k) {
        const double c = std::sqrt(2.0 / (k + 1)) * x * a - std::sqrt(static_cast<double>(k) / (k + 1)) * b;
        b = a;
        a = c;
      }
      pn = a;
      pn1 = b;
      const double dp = std::sqrt(2.0 * n) * pn1;
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    // Recompute p_{n-1} at the polished node.
    double a = p0, b = 0;
    for (int k = 0; k + 1 < n; ++k) {
      const double c = std::sqrt(2.0 / (k + 1)) * x * a - std::sqrt(static_cast<double>(k) / (k + 1)) * b;
      b = a;
      a = c;
    }
    const double dp = std::sqrt(2.0 * n) * a;
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / (dp * dp);
  }
  return rule;
}

double quadrature_logz(const Model& model, int nodes) {
  require_gaussian(model.prior, "quadrature_logz");
  const Eigen::Index p = model.data.p();
  if (p > 3) throw CapacityError("quadrature_logz supports p <= 3, got p = " + std::to_string(p));
  const auto rule = gauss_hermite(nodes);
  std::vector<double> x(nodes), lw(nodes);
  for (int k = 0; k < nodes; ++k) {
    x[k] = std::numbers::sqrt2 * rule.nodes[k];
    lw[k] = std::log(rule.weights[k]) - 0.5 * std::log(std::numbers::pi);
  }
  const std::size_t total = static_cast<std::size_t>(std::pow(nodes, static_cast<double>(p)));
  LogSumExp acc;
  Vector beta(p);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    double logw = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const std::size_t k = r % static_cast<std::size_t>(nodes);
      r /= static_cast<std::size_t>(nodes);
      beta[j] = x[k];
      logw += lw[k];
    }
    acc.add(logw + hamiltonian(model.family, model.data, beta));
  }
  return acc.value();
}

double expected_log_normalizer_exact(const GlmFamily& family, const Matrix& X,
                                     const std::vector<double>& support,
                                     const std::vector<std::vector<double>>& q, std::size_t cap) {
  if (q.size() != static_cast<std::size_t>(X.cols()))
    throw ShapeError("expected_log_normalizer_exact: q needs one row per column of X");
  enumeration_size(support.size(), X.cols(), cap);
  std::vector<std::vector<double>> logq(q.size());
  for (std::size_t j = 0; j < q.size(); ++j)
    for (double v : q[j]) logq[j].push_back(v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity());
  ConfigurationWalker walker(X, support);
  std::vector<double> partial(support.size(), 0.0);
  parallel_for(support.size(), [&](std::size_t t) {
    if (q.back()[t] == 0) return;
    walker.walk_block(t, [&](const auto& digits, const Vector& theta) {
      double lw = 0;
      for (std::size_t j = 0; j < digits.size(); ++j) lw += logq[j][digits[j]];
      if (lw == -std::numeric_limits<double>::infinity()) return;
      partial[t] += std::exp(lw) * sum_b(family, theta);
    });
  });
  double total = 0;
  for (double v : partial) total += v;
  return total;
}

IdentityCheck elbo1_identity_check(const Model& model, const std::vector<std::vector<double>>& q,
                                   std::size_t cap) {
  const auto& prior = require_discrete(model.prior, "elbo1_identity_check");
  const auto p = static_cast<std::size_t>(model.data.p());
  const std::size_t m = prior.size();
  if (q.size() != p) throw ShapeError("elbo1_identity_check: q needs one row per coordinate");
  for (const auto& row : q) {
    if (row.size() != m) throw ShapeError("elbo1_identity_check: q rows must match the support size");
    double s = 0;
    for (double v : row) {
      if (v < 0) throw ParameterError("elbo1_identity_check: negative probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ParameterError("elbo1_identity_check: q rows must sum to 1");
  }
  enumeration_size(m, model.data.p(), cap);

  IdentityCheck out;
  out.log_z = enumerate_logz(model, cap);

  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < m; ++k)
      if (q[j][k] > 0) out.kl_prior += q[j][k] * (std::log(q[j][k]) - prior.log_probs()[k]);

  ConfigurationWalker walker(model.data.X, prior.support());
  LogWeight lw{model.family, prior, model.data.X.transpose() * model.data.y};
  struct Acc {
    double eh = 0, klpost = 0;
  };
  std::vector<Acc> partial(m);
  parallel_for(m, [&](std::size_t t) {
    walker.walk_block(t, [&](const auto& digits, const Vector& theta) {
      double logq = 0, logprior = 0;
      for (std::size_t j = 0; j < p; ++j) {
        const double qj = q[j][digits[j]];
        if (qj == 0) return;
        logq += std::log(qj);
        logprior += prior.log_probs()[digits[j]];
      }
      const double w = std::exp(logq);
      const double h = lw(digits, theta) - logprior;
      partial[t].eh += w * h;
      // log mu(beta) = log pi_p(beta) + H(beta) - log Z
      partial[t].klpost += w * (logq - (logprior + h - out.log_z));
    });
  });
  for (const auto& a : partial) {
    out.expected_h += a.eh;
    out.kl_posterior += a.klpost;
  }
  out.lhs = out.log_z;
  out.rhs = out.expected_h - out.kl_prior + out.kl_posterior;
  out.gap = out.lhs - out.rhs;
  return out;
}

}  // namespace nmfvi
