#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nmfvi/error.hpp"

namespace nmfvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace detail

enum class FamilyKind { linear, logistic, binomial };

/// Set of admissible responses: all reals, or the integers {0..trials}.
struct ResponseDomain {
  bool real_line = true;
  int trials = 0;

  bool contains(double y) const {
    if (!std::isfinite(y)) return false;
    if (real_line) return true;
    return y >= 0 && y <= trials && std::floor(y) == y;
  }
  std::string describe() const;
};

/// Canonical exponential family with log-normaliser b, normalised so b(0) = 0.
///
/// linear:      b(t) = t^2 / 2
/// logistic:    b(t) = log(1 + e^t) - log 2
/// binomial(N): N times the logistic quantities
class GlmFamily {
 public:
  static GlmFamily linear() { return GlmFamily(FamilyKind::linear, 1); }
  static GlmFamily logistic() { return GlmFamily(FamilyKind::logistic, 1); }
  static GlmFamily binomial(int trials);
  /// "linear", "logistic" or "binomial"; trials only used for binomial.
  static GlmFamily from_name(const std::string& name, int trials = 1);

  FamilyKind kind() const { return kind_; }
  int trials() const { return trials_; }
  std::string name() const;
  ResponseDomain domain() const;

  double b(double t) const {
    switch (kind_) {
      case FamilyKind::linear:
        return 0.5 * t * t;
      case FamilyKind::logistic:
        return detail::softplus(t) - std::numbers::ln2;
      case FamilyKind::binomial:
        return trials_ * (detail::softplus(t) - std::numbers::ln2);
    }
    return 0.0;
  }

  double b1(double t) const {
    switch (kind_) {
      case FamilyKind::linear:
        return t;
      case FamilyKind::logistic:
        return detail::sigmoid(t);
      case FamilyKind::binomial:
        return trials_ * detail::sigmoid(t);
    }
    return 0.0;
  }

  double b2(double t) const {
    switch (kind_) {
      case FamilyKind::linear:
        return 1.0;
      case FamilyKind::logistic: {
        const double s = detail::sigmoid(t);
        return s * (1.0 - s);
      }
      case FamilyKind::binomial: {
        const double s = detail::sigmoid(t);
        return trials_ * s * (1.0 - s);
      }
    }
    return 0.0;
  }

  double b2_at_zero() const { return kind_ == FamilyKind::linear ? 1.0 : 0.25 * trials_; }
  double b2_sup() const { return b2_at_zero(); }

  friend bool operator==(const GlmFamily&, const GlmFamily&) = default;

 private:
  GlmFamily(FamilyKind kind, int trials) : kind_(kind), trials_(trials) {}

  FamilyKind kind_;
  int trials_;
};

/// Design matrix (rows x_i) and responses.
struct Dataset {
  Matrix X;
  Vector y;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

/// Finite prior on [-1, 1]. Support is stored sorted ascending.
class DiscretePrior {
 public:
  DiscretePrior(std::vector<double> support, std::vector<double> probs);

  /// The three-point prior on {-1, 0, 1}.
  static DiscretePrior three_point(double p_minus, double p_zero, double p_plus);

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<double>& log_probs() const { return log_probs_; }
  std::size_t size() const { return support_.size(); }
  double min() const { return support_.front(); }
  double max() const { return support_.back(); }
  double mean() const;
  /// Index of the support point equal to s, or size() when absent.
  std::size_t index_of(double s) const;
  bool symmetric(double tol = 1e-12) const;

 private:
  std::vector<double> support_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

struct StandardGaussianPrior {};

using PriorSpec = std::variant<DiscretePrior, StandardGaussianPrior>;

/// Throws UnsupportedError naming `what` unless the prior is discrete.
const DiscretePrior& require_discrete(const PriorSpec& prior, const char* what);
void require_gaussian(const PriorSpec& prior, const char* what);
std::string prior_kind(const PriorSpec& prior);

/// Family, data and prior bundled for the solvers.
struct Model {
  GlmFamily family;
  Dataset data;
  PriorSpec prior;
};

/// H(beta) = sum_i (y_i theta_i - b(theta_i)), theta = X beta.
double hamiltonian(const GlmFamily& family, const Dataset& data, const Vector& beta);

/// X^T (y - b'(X beta)).
Vector hamiltonian_grad(const GlmFamily& family, const Dataset& data, const Vector& beta);

/// Throws DomainError at the first response outside the family's domain,
/// ParameterError for empty or non-finite data.
void validate(const Dataset& data, const GlmFamily& family);

}  // namespace nmfvi
