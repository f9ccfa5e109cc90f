#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nmfvi/glm.hpp"
#include "nmfvi/rng.hpp"

namespace nmfvi {

namespace detail {
class IncrementKernel;
}

/// One Markov chain over support indices, with theta = X beta cached.
struct ChainState {
  std::vector<std::size_t> beta;
  Vector theta;
  CounterRng rng;
  std::uint64_t sweep_count = 0;
  /// Cached sigmoid(theta) for logistic-type families; rebuilt when its size is stale.
  Vector sig;
};

/// Single-site systematic-scan Gibbs sampler for a discrete-prior GLM posterior.
class GibbsSampler {
 public:
  /// Full theta recompute interval (sweeps).
  static constexpr std::uint64_t kRevalidateEvery = 100;

  explicit GibbsSampler(const Model& model);

  /// Chain started from a prior draw; the stream is keyed by (seed, chain).
  ChainState init_chain(std::uint64_t seed, std::uint64_t chain) const;
  ChainState chain_at(const std::vector<std::size_t>& beta, std::uint64_t seed) const;

  /// log pi(s) + s sum_i y_i x_ij - sum_i b(theta_i - x_ij beta_j + x_ij s), per support point.
  std::vector<double> conditional_logits(const ChainState& chain, std::size_t j) const;

  void resample(ChainState& chain, std::size_t j) const;
  void sweep(ChainState& chain) const;

  Vector beta_values(const ChainState& chain) const;
  const DiscretePrior& prior() const { return prior_; }

 private:
  const Model& model_;
  const DiscretePrior& prior_;
  Vector xty_;
  std::shared_ptr<const detail::IncrementKernel> kernel_;
};

std::vector<double> conditional_logits(const Model& model, const ChainState& chain, std::size_t j);
/// Convenience single sweep; prefer a GibbsSampler for repeated calls.
void gibbs_sweep(const Model& model, ChainState& chain);

struct GibbsOptions {
  int chains = 4;
  int sweeps = 5000;
  int burn_in = 1000;
  std::uint64_t seed = 0;
  /// Keep every `thin`-th post-burn-in state (as beta values) when > 0.
  int keep_every = 0;
};

struct GibbsResult {
  Vector mean;
  std::vector<Vector> chain_means;
  /// max over coordinates of the spread between half-chain means.
  double split_disagreement = 0;
  std::vector<Vector> samples;
};

/// Pools post-burn-in states across independent chains.
GibbsResult posterior_mean(const Model& model, const GibbsOptions& opt = {});

}  // namespace nmfvi
