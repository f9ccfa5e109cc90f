#include "nmfvi/simulate.hpp"

#include "nmfvi/rng.hpp"
#include "nmfvi/tilt.hpp"

namespace nmfvi {

Vector draw_beta(const PriorSpec& prior, Eigen::Index p, std::uint64_t seed) {
  const std::uint64_t base = stream_seed(seed, Stream::signal);
  Vector beta(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    CounterRng rng(base, {static_cast<std::uint64_t>(j)});
    if (const auto* d = std::get_if<DiscretePrior>(&prior))
      beta[j] = d->support()[sample_index(d->probs(), rng.uniform())];
    else
      beta[j] = rng.normal();
  }
  return beta;
}

Vector draw_response(const GlmFamily& family, const Vector& theta, std::uint64_t seed) {
  const std::uint64_t base = stream_seed(seed, Stream::response);
  Vector y(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    CounterRng rng(base, {static_cast<std::uint64_t>(i)});
    switch (family.kind()) {
      case FamilyKind::linear:
        y[i] = theta[i] + rng.normal();
        break;
      case FamilyKind::logistic:
        y[i] = rng.uniform() < detail::sigmoid(theta[i]) ? 1.0 : 0.0;
        break;
      case FamilyKind::binomial: {
        const double pr = detail::sigmoid(theta[i]);
        int k = 0;
        for (int t = 0; t < family.trials(); ++t) k += rng.uniform() < pr;
        y[i] = k;
        break;
      }
    }
  }
  return y;
}

}  // namespace nmfvi
