#include "nmfvi/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "increments.hpp"
#include "nmfvi/parallel.hpp"
#include "nmfvi/tilt.hpp"

namespace nmfvi {

GibbsSampler::GibbsSampler(const Model& model)
    : model_(model),
      prior_(require_discrete(model.prior, "the Gibbs sampler")),
      xty_(model.data.X.transpose() * model.data.y),
      kernel_(std::make_shared<detail::IncrementKernel>(model.family, model.data.X, prior_.support())) {}

ChainState GibbsSampler::init_chain(std::uint64_t seed, std::uint64_t chain) const {
  CounterRng rng(stream_seed(seed, Stream::gibbs), {chain});
  std::vector<std::size_t> beta(static_cast<std::size_t>(model_.data.p()));
  for (auto& b : beta) b = sample_index(prior_.probs(), rng.uniform());
  ChainState st{std::move(beta), {}, rng, 0, {}};
  st.theta = model_.data.X * beta_values(st);
  return st;
}

ChainState GibbsSampler::chain_at(const std::vector<std::size_t>& beta, std::uint64_t seed) const {
  if (beta.size() != static_cast<std::size_t>(model_.data.p())) throw ShapeError("chain_at: wrong length");
  ChainState st{beta, {}, CounterRng(stream_seed(seed, Stream::gibbs)), 0, {}};
  st.theta = model_.data.X * beta_values(st);
  return st;
}

Vector GibbsSampler::beta_values(const ChainState& chain) const {
  Vector b(static_cast<Eigen::Index>(chain.beta.size()));
  for (std::size_t j = 0; j < chain.beta.size(); ++j)
    b[static_cast<Eigen::Index>(j)] = prior_.support()[chain.beta[j]];
  return b;
}

std::vector<double> GibbsSampler::conditional_logits(const ChainState& chain, std::size_t j) const {
  const auto& X = model_.data.X;
  const auto& fam = model_.family;
  const auto& sup = prior_.support();
  const auto jj = static_cast<Eigen::Index>(j);
  const auto col = X.col(jj);
  const double current = sup[chain.beta[j]];
  std::vector<double> logits(sup.size());
  for (std::size_t k = 0; k < sup.size(); ++k) logits[k] = prior_.log_probs()[k] + sup[k] * xty_[jj];
  const Eigen::Index n = X.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double base = chain.theta[i] - col[i] * current;
    for (std::size_t k = 0; k < sup.size(); ++k) logits[k] -= fam.b(base + col[i] * sup[k]);
  }
  return logits;
}

void GibbsSampler::resample(ChainState& chain, std::size_t j) const {
  // Logits relative to the current state: log pi(s) + s (X^T y)_j - G_j(s), with G_j
  // the likelihood increment from the shared kernel (constants cancel on normalising).
  const auto& sup = prior_.support();
  const std::size_t m = sup.size();
  if (!kernel_->linear() && chain.sig.size() != chain.theta.size()) kernel_->refresh(chain.theta, chain.sig);
  double G[16];
  std::vector<double> gbuf;
  double* g = G;
  if (kernel_->targets() > 16) {
    gbuf.resize(kernel_->targets());
    g = gbuf.data();
  }
  kernel_->coordinate(chain.theta, chain.sig, j, chain.beta[j], g);
  const double xty = xty_[static_cast<Eigen::Index>(j)];
  double w[16];
  std::vector<double> wbuf;
  double* wp = w;
  if (m > 16) {
    wbuf.resize(m);
    wp = wbuf.data();
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) {
    wp[k] = prior_.log_probs()[k] + sup[k] * xty - g[k];
    mx = std::max(mx, wp[k]);
  }
  double total = 0;
  for (std::size_t k = 0; k < m; ++k) total += (wp[k] = std::exp(wp[k] - mx));
  for (std::size_t k = 0; k < m; ++k) wp[k] /= total;
  const std::size_t next = sample_index(std::span<const double>(wp, m), chain.rng.uniform());
  if (next != chain.beta[j]) {
    chain.theta += model_.data.X.col(static_cast<Eigen::Index>(j)) * (sup[next] - sup[chain.beta[j]]);
    kernel_->move(chain.theta, chain.sig, j, chain.beta[j], next);
    chain.beta[j] = next;
  }
}

void GibbsSampler::sweep(ChainState& chain) const {
  for (std::size_t j = 0; j < chain.beta.size(); ++j) resample(chain, j);
  if (++chain.sweep_count % kRevalidateEvery == 0) {
    chain.theta = model_.data.X * beta_values(chain);
    kernel_->refresh(chain.theta, chain.sig);
  }
}

std::vector<double> conditional_logits(const Model& model, const ChainState& chain, std::size_t j) {
  return GibbsSampler(model).conditional_logits(chain, j);
}

void gibbs_sweep(const Model& model, ChainState& chain) { GibbsSampler(model).sweep(chain); }

GibbsResult posterior_mean(const Model& model, const GibbsOptions& opt) {
  if (opt.chains < 1 || opt.sweeps < 1 || opt.burn_in < 0 || opt.burn_in >= opt.sweeps)
    throw ParameterError("posterior_mean: need chains >= 1 and 0 <= burn_in < sweeps");
  const GibbsSampler sampler(model);
  const Eigen::Index p = model.data.p();
  const int kept = opt.sweeps - opt.burn_in;
  const int first_half = kept / 2;

  struct ChainOut {
    Vector half_a, half_b;
    std::vector<Vector> samples;
  };
  std::vector<ChainOut> outs(static_cast<std::size_t>(opt.chains));
  parallel_for(outs.size(), [&](std::size_t c) {
    ChainState chain = sampler.init_chain(opt.seed, c);
    ChainOut& out = outs[c];
    out.half_a = Vector::Zero(p);
    out.half_b = Vector::Zero(p);
    for (int t = 0; t < opt.sweeps; ++t) {
      sampler.sweep(chain);
      if (t < opt.burn_in) continue;
      const int k = t - opt.burn_in;
      const Vector b = sampler.beta_values(chain);
      (k < first_half ? out.half_a : out.half_b) += b;
      if (opt.keep_every > 0 && k % opt.keep_every == 0) out.samples.push_back(b);
    }
  });

  GibbsResult res;
  res.mean = Vector::Zero(p);
  std::vector<Vector> halves;
  for (auto& o : outs) {
    res.chain_means.push_back((o.half_a + o.half_b) / kept);
    res.mean += res.chain_means.back();
    if (first_half > 0) halves.push_back(o.half_a / first_half);
    halves.push_back(o.half_b / (kept - first_half));
    for (auto& s : o.samples) res.samples.push_back(std::move(s));
  }
  res.mean /= opt.chains;
  for (Eigen::Index j = 0; j < p; ++j) {
    double lo = halves.front()[j], hi = lo;
    for (const auto& h : halves) {
      lo = std::min(lo, h[j]);
      hi = std::max(hi, h[j]);
    }
    res.split_disagreement = std::max(res.split_disagreement, hi - lo);
  }
  return res;
}

}  // namespace nmfvi
