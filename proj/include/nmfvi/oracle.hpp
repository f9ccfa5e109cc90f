#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "nmfvi/glm.hpp"

namespace nmfvi {

/// Default cap on |support|^p for exact enumeration (3-point support up to p = 13).
inline constexpr std::size_t kEnumerationCap = 2'000'000;

/// Throws CapacityError unless levels^p <= cap.
std::size_t enumeration_size(std::size_t levels, Eigen::Index p, std::size_t cap);

/// Visits every configuration of a p-dimensional discrete grid in mixed-radix
/// order, keeping theta = X beta current via rank-one column updates.
/// The highest coordinate is the outer digit; blocks of it are independent so
/// callers can split the work.
class ConfigurationWalker {
 public:
  ConfigurationWalker(const Matrix& X, const std::vector<double>& support);

  /// Calls visit(digits, theta) for every configuration with top digit `top`.
  void walk_block(std::size_t top,
                  const std::function<void(const std::vector<std::size_t>&, const Vector&)>& visit) const;
  void walk(const std::function<void(const std::vector<std::size_t>&, const Vector&)>& visit) const;

  std::size_t levels() const { return support_.size(); }

 private:
  const Matrix& X_;
  std::vector<double> support_;
};

/// Exact log Z = log sum_beta pi_p(beta) exp(H(beta)) for a discrete prior.
double enumerate_logz(const Model& model, std::size_t cap = kEnumerationCap);

struct PosteriorSummary {
  double log_z = 0;
  Vector mean;
  /// marginals[j][k] = mu(beta_j = support[k] | y)
  std::vector<std::vector<double>> marginals;
};

PosteriorSummary enumerate_posterior(const Model& model, std::size_t cap = kEnumerationCap);

/// Exact posterior pmf over all configurations in walker order (small p only).
std::vector<double> enumerate_joint_posterior(const Model& model, std::size_t cap = 100'000);

/// Gauss-Hermite rule for the weight exp(-x^2).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int n);

/// log Z under the standard Gaussian prior by tensor Gauss-Hermite, p <= 3.
double quadrature_logz(const Model& model, int nodes = 64);

/// Exact terms of  log Z = E_Q[H] - KL(Q || pi_p) + KL(Q || mu)  for a product Q.
struct IdentityCheck {
  double log_z = 0;
  double expected_h = 0;
  double kl_prior = 0;
  double kl_posterior = 0;
  double lhs = 0;  // log Z
  double rhs = 0;  // E_Q[H] - KL(Q||pi_p) + KL(Q||mu)
  double gap = 0;  // lhs - rhs
  double elbo() const { return expected_h - kl_prior; }
};

/// q[j][k] = Q(beta_j = support[k]); rows must be probability vectors.
IdentityCheck elbo1_identity_check(const Model& model, const std::vector<std::vector<double>>& q,
                                   std::size_t cap = kEnumerationCap);

/// E_Q[sum_i b(x_i^T beta)] for a product Q over the prior support, by enumeration.
double expected_log_normalizer_exact(const GlmFamily& family, const Matrix& X,
                                     const std::vector<double>& support,
                                     const std::vector<std::vector<double>>& q,
                                     std::size_t cap = kEnumerationCap);

}  // namespace nmfvi
