#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nmfvi/glm.hpp"

namespace nmfvi::detail {

// Log-likelihood increments from moving one coordinate between support points:
//   G_j(t) = sum_i b(theta_i + x_ij (t - sigma_j)) - b(theta_i).
//
// Logistic-type families use b(t + D) - b(t) = N log(1 + sigmoid(t) expm1(D)), so with
// sigmoid(theta) cached and expm1(x_ij D) tabulated per support difference D the sum of
// logs becomes a log of products over row chunks short enough not to overflow. The
// linear family is a quadratic in D. Targets are the support points, plus 0 when the
// support lacks it.
class IncrementKernel {
 public:
  IncrementKernel(const GlmFamily& fam, const Matrix& X, const std::vector<double>& sup)
      : fam_(fam), X_(X), sup_(sup), m_(sup.size()) {
    targets_ = sup;
    zero_ = static_cast<std::size_t>(std::find(sup.begin(), sup.end(), 0.0) - sup.begin());
    if (zero_ == m_) targets_.push_back(0.0);
    const Eigen::Index n = X.rows(), p = X.cols();
    if (linear()) {
      col_sq_ = X.colwise().squaredNorm().transpose();
      return;
    }
    double max_delta = 0;
    for (double a : sup)
      for (double t : targets_) max_delta = std::max(max_delta, std::abs(t - a));
    chunk_.assign(static_cast<std::size_t>(p), 0);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double bound = n > 0 ? X.col(j).cwiseAbs().maxCoeff() * max_delta : 0.0;
      // Columns whose factors could overflow fall back to direct evaluation.
      if (bound > 30) continue;
      const double c = bound > 0 ? std::floor(600 / bound) : static_cast<double>(n);
      chunk_[static_cast<std::size_t>(j)] = static_cast<int>(std::clamp<double>(c, 1.0, std::max<double>(1.0, n)));
    }
    index_.assign(m_ * targets_.size(), -1);
    for (std::size_t a = 0; a < m_; ++a)
      for (std::size_t t = 0; t < targets_.size(); ++t) {
        const double delta = targets_[t] - sup[a];
        if (delta == 0) continue;
        int idx = -1;
        for (std::size_t e = 0; e < deltas_.size(); ++e)
          if (deltas_[e] == delta) idx = static_cast<int>(e);
        if (idx < 0) {
          idx = static_cast<int>(deltas_.size());
          deltas_.push_back(delta);
          tables_.push_back(X.unaryExpr([delta](double x) { return std::expm1(x * delta); }));
        }
        index_[a * targets_.size() + t] = idx;
      }
  }

  bool linear() const { return fam_.kind() == FamilyKind::linear; }
  std::size_t targets() const { return targets_.size(); }
  std::size_t zero_target() const { return zero_; }

  /// sigmoid(theta) cache used by the logistic-type path (unused for linear).
  void refresh(const Vector& theta, Vector& sig) const {
    if (linear()) return;
    sig.resize(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) sig[i] = sigmoid(theta[i]);
  }

  /// Keep the cache in step after theta += x_j (sup[to] - sup[from]).
  void move(const Vector& theta, Vector& sig, std::size_t j, std::size_t from, std::size_t to) const {
    if (linear()) return;
    const auto jj = static_cast<Eigen::Index>(j);
    const int idx = index_[from * targets_.size() + to];
    if (chunk_[j] == 0 || idx < 0) {
      for (Eigen::Index i = 0; i < theta.size(); ++i) sig[i] = sigmoid(theta[i]);
      return;
    }
    const double* e = tables_[static_cast<std::size_t>(idx)].col(jj).data();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double f = 1.0 + e[i];
      sig[i] = sig[i] * f / (1.0 + sig[i] * e[i]);
    }
  }

  /// G[t] for every target t, with theta, sig at the configuration where coordinate j sits at `cur`.
  void coordinate(const Vector& theta, const Vector& sig, std::size_t j, std::size_t cur, double* G) const {
    const auto jj = static_cast<Eigen::Index>(j);
    const std::size_t T = targets_.size();
    const Eigen::Index n = X_.rows();
    if (linear()) {
      const double xt = X_.col(jj).dot(theta);
      for (std::size_t t = 0; t < T; ++t) {
        const double delta = targets_[t] - sup_[cur];
        G[t] = delta * xt + 0.5 * delta * delta * col_sq_[jj];
      }
      return;
    }
    const int chunk = chunk_[j];
    for (std::size_t t = 0; t < T; ++t) {
      const int idx = index_[cur * T + t];
      if (idx < 0) {
        G[t] = 0;
        continue;
      }
      if (chunk == 0) {
        const double delta = deltas_[static_cast<std::size_t>(idx)];
        double acc = 0;
        for (Eigen::Index i = 0; i < n; ++i) acc += fam_.b(theta[i] + X_(i, jj) * delta) - fam_.b(theta[i]);
        G[t] = acc;
        continue;
      }
      const double* e = tables_[static_cast<std::size_t>(idx)].col(jj).data();
      const double* sg = sig.data();
      double acc = 0;
      for (Eigen::Index i0 = 0; i0 < n; i0 += chunk) {
        const Eigen::Index i1 = std::min<Eigen::Index>(n, i0 + chunk);
        // Four partial products break the multiply dependency chain; together they
        // still cover at most `chunk` rows, so the final product cannot overflow.
        double p0 = 1, p1 = 1, p2 = 1, p3 = 1;
        Eigen::Index i = i0;
        for (; i + 4 <= i1; i += 4) {
          p0 *= 1.0 + sg[i] * e[i];
          p1 *= 1.0 + sg[i + 1] * e[i + 1];
          p2 *= 1.0 + sg[i + 2] * e[i + 2];
          p3 *= 1.0 + sg[i + 3] * e[i + 3];
        }
        for (; i < i1; ++i) p0 *= 1.0 + sg[i] * e[i];
        acc += std::log((p0 * p1) * (p2 * p3));
      }
      G[t] = fam_.trials() * acc;
    }
  }

  /// vals[j * m + k] = G_j(s_k) - G_j(0) for every coordinate.
  void row(const Vector& theta, const std::vector<std::size_t>& digits, double* vals, Vector& sig,
           std::vector<double>& G) const {
    refresh(theta, sig);
    G.resize(targets_.size());
    for (std::size_t j = 0; j < digits.size(); ++j) {
      coordinate(theta, sig, j, digits[j], G.data());
      const double ref = G[zero_];
      for (std::size_t k = 0; k < m_; ++k) vals[j * m_ + k] = G[k] - ref;
    }
  }

 private:
  const GlmFamily& fam_;
  const Matrix& X_;
  const std::vector<double>& sup_;
  std::size_t m_;
  std::size_t zero_;
  std::vector<double> targets_;
  Vector col_sq_;
  std::vector<int> chunk_;
  std::vector<double> deltas_;
  std::vector<Matrix> tables_;
  std::vector<int> index_;
};

}  // namespace nmfvi::detail
