#include "nmfvi/tilt_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "increments.hpp"
#include "nmfvi/oracle.hpp"
#include "nmfvi/parallel.hpp"
#include "nmfvi/rng.hpp"

namespace nmfvi {

namespace {

constexpr double kMinTiltVariance = 1e-14;
constexpr std::uint64_t kTiltDrawTag = 0x7417;

// Fixed uniforms (n_samples x p) behind the coordinate draws.
Matrix base_uniforms(Eigen::Index p, const MCConfig& cfg, Stream stream) {
  cfg.validate();
  const auto S = static_cast<Eigen::Index>(cfg.n_samples);
  const Eigen::Index fresh = cfg.antithetic ? S / 2 : S;
  Matrix U(S, p);
  const std::uint64_t base = stream_seed(cfg.seed, stream);
  for (Eigen::Index s = 0; s < fresh; ++s) {
    CounterRng rng(base, {kTiltDrawTag, static_cast<std::uint64_t>(s)});
    for (Eigen::Index j = 0; j < p; ++j) U(s, j) = rng.uniform();
  }
  if (cfg.antithetic) U.bottomRows(fresh) = 1.0 - U.topRows(fresh).array();
  return U;
}

bool use_enumeration(const DiscretePrior& prior, Eigen::Index p, const MCConfig& cfg) {
  if (cfg.enumeration_cap == 0) return false;
  return std::pow(static_cast<double>(prior.size()), static_cast<double>(p)) <=
         static_cast<double>(cfg.enumeration_cap);
}

void check_state(const Model& model, const TiltState& st) {
  const Eigen::Index p = model.data.p();
  if (st.u.size() != p || st.v.size() != p || st.d.size() != p)
    throw ShapeError("TiltState dimension does not match the design");
  if ((st.d.array() < 0).any()) throw RangeError("TiltState: d must be non-negative");
}

std::vector<std::vector<double>> tilt_table(const DiscretePrior& prior, const TiltState& st, double b2z) {
  std::vector<std::vector<double>> q(static_cast<std::size_t>(st.v.size()));
  for (Eigen::Index j = 0; j < st.v.size(); ++j)
    q[static_cast<std::size_t>(j)] = tilted_probs(prior, {st.v[j], st.d[j], b2z});
  return q;
}

// Mean and standard error of per-sample values; antithetic pairs are averaged first.
void mean_se(const Matrix& vals, bool antithetic, Vector& mean, Vector& se) {
  Matrix units = vals;
  if (antithetic) {
    const Eigen::Index half = vals.rows() / 2;
    units = 0.5 * (vals.topRows(half) + vals.bottomRows(half));
  }
  const double N = static_cast<double>(units.rows());
  mean = units.colwise().mean().transpose();
  se.resize(units.cols());
  for (Eigen::Index c = 0; c < units.cols(); ++c) {
    const double var = N > 1 ? (units.col(c).array() - mean[c]).square().sum() / (N - 1) : 0.0;
    se[c] = std::sqrt(var / N);
  }
}

std::vector<FjEstimate> f_estimates_exact(const Model& model, const DiscretePrior& prior,
                                          const std::vector<std::vector<double>>& q) {
  const auto& X = model.data.X;
  const auto& sup = prior.support();
  const std::size_t p = q.size(), m = sup.size();
  const detail::IncrementKernel kernel(model.family, X, sup);
  ConfigurationWalker walker(X, sup);
  std::vector<std::vector<double>> partial(m, std::vector<double>(p * m, 0.0));
  parallel_for(m, [&](std::size_t t) {
    Vector work;
    std::vector<double> G;
    std::vector<double> row(p * m);
    std::vector<std::size_t> dig(p);
    walker.walk_block(t, [&](const auto& digits, const Vector& theta) {
      double w = 1;
      for (std::size_t j = 0; j < p; ++j) {
        w *= q[j][digits[j]];
        dig[j] = digits[j];
      }
      kernel.row(theta, dig, row.data(), work, G);
      for (std::size_t c = 0; c < p * m; ++c) partial[t][c] += w * row[c];
    });
  });
  std::vector<FjEstimate> out(p, FjEstimate{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)});
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < m; ++k) out[j].values[k] += partial[t][j * m + k];
  return out;
}

std::vector<FjEstimate> f_estimates_mc(const Model& model, const DiscretePrior& prior,
                                       const std::vector<std::vector<double>>& q, const Matrix& U,
                                       bool antithetic) {
  const auto& X = model.data.X;
  const auto& sup = prior.support();
  const std::size_t p = q.size(), m = sup.size();
  const Eigen::Index S = U.rows();
  const detail::IncrementKernel kernel(model.family, X, sup);
  Matrix vals(static_cast<Eigen::Index>(p * m), S);
  parallel_for(static_cast<std::size_t>(S), [&](std::size_t s_idx) {
    const auto s = static_cast<Eigen::Index>(s_idx);
    Vector sigma(static_cast<Eigen::Index>(p)), work;
    std::vector<double> G;
    std::vector<std::size_t> digits(p);
    for (std::size_t j = 0; j < p; ++j) {
      digits[j] = sample_index(q[j], U(s, static_cast<Eigen::Index>(j)));
      sigma[static_cast<Eigen::Index>(j)] = sup[digits[j]];
    }
    const Vector theta = X * sigma;
    kernel.row(theta, digits, vals.col(s).data(), work, G);
  });
  Vector mean, se;
  mean_se(vals.transpose(), antithetic, mean, se);
  std::vector<FjEstimate> out(p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < m; ++k) {
      out[j].values.push_back(mean[static_cast<Eigen::Index>(j * m + k)]);
      out[j].se.push_back(se[static_cast<Eigen::Index>(j * m + k)]);
    }
  return out;
}

// Shared state for repeated evaluations within one fit.
struct TiltContext {
  const Model& model;
  const DiscretePrior& prior;
  double b2z;
  Vector xty;
  Matrix U;
  MCConfig cfg;
  bool exact;

  TiltContext(const Model& m, const MCConfig& c)
      : model(m),
        prior(require_discrete(m.prior, "the tilt solver")),
        b2z(m.family.b2_at_zero()),
        xty(m.data.X.transpose() * m.data.y),
        cfg(c),
        exact(use_enumeration(prior, m.data.p(), c)) {
    c.validate();
    if (!exact) U = base_uniforms(m.data.p(), c, Stream::solver);
  }

  std::vector<FjEstimate> f_all(const TiltState& st) const {
    const auto q = tilt_table(prior, st, b2z);
    return exact ? f_estimates_exact(model, prior, q) : f_estimates_mc(model, prior, q, U, cfg.antithetic);
  }

  Vector rhs(const TiltState& st) const {
    const auto f = f_all(st);
    const Eigen::Index p = st.u.size();
    Vector out(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const TiltParams t{st.v[j], st.d[j], b2z};
      const double var = c_ddot(prior, t);
      if (!(var >= kMinTiltVariance))
        throw DegenerateTiltError(static_cast<std::size_t>(j),
                                  "degenerate tilt at coordinate " + std::to_string(j) +
                                      ": tilted variance " + std::to_string(var) + " below 1e-14");
      const double cov_f = tilt_cov(prior, t, f[static_cast<std::size_t>(j)].values);
      const double cov_sq = tilt_cov(prior, t, [](double x) { return x * x; });
      out[j] = xty[j] - cov_f / var + b2z * 0.5 * st.d[j] * cov_sq / var;
    }
    return out;
  }

  TiltState update(const TiltState& st, double damping) const {
    TiltState next = st;
    next.v = (1.0 - damping) * st.v + damping * rhs(st);
    for (Eigen::Index j = 0; j < st.u.size(); ++j) next.u[j] = c_dot(prior, {next.v[j], st.d[j], b2z});
    return next;
  }
};

}  // namespace

Vector tilt_scales(const Matrix& X) { return X.colwise().squaredNorm().transpose(); }

TiltState make_tilt_state(const Model& model, const Vector& u) {
  const auto& prior = require_discrete(model.prior, "make_tilt_state");
  if (u.size() != model.data.p()) throw ShapeError("make_tilt_state: u has the wrong length");
  TiltState st{u, Vector(u.size()), tilt_scales(model.data.X)};
  const double b2z = model.family.b2_at_zero();
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    try {
      st.v[j] = h_inverse(prior, u[j], st.d[j], b2z);
    } catch (const RangeError& e) {
      throw RangeError("coordinate " + std::to_string(j) + ": " + e.what());
    }
    st.u[j] = c_dot(prior, {st.v[j], st.d[j], b2z});
  }
  return st;
}

std::vector<FjEstimate> f_estimates(const Model& model, const TiltState& state, const MCConfig& cfg) {
  check_state(model, state);
  return TiltContext(model, cfg).f_all(state);
}

FjEstimate f_j_estimate(const Model& model, const TiltState& state, std::size_t j, const MCConfig& cfg) {
  if (j >= static_cast<std::size_t>(model.data.p()))
    throw RangeError("f_j_estimate: coordinate " + std::to_string(j) + " out of range");
  return f_estimates(model, state, cfg)[j];
}

Vector stationarity_rhs(const Model& model, const TiltState& state, const MCConfig& cfg) {
  check_state(model, state);
  return TiltContext(model, cfg).rhs(state);
}

TiltState tilt_update(const Model& model, const TiltState& state, const MCConfig& cfg, double damping) {
  if (!(damping > 0.0 && damping <= 1.0)) throw ParameterError("tilt_update: damping must lie in (0, 1]");
  check_state(model, state);
  return TiltContext(model, cfg).update(state, damping);
}

double stationarity_residual(const Model& model, const TiltState& state, const MCConfig& cfg) {
  return (state.v - stationarity_rhs(model, state, cfg)).lpNorm<Eigen::Infinity>();
}

Estimate elbo_tilt(const Model& model, const Vector& u, const Vector& d, const MCConfig& cfg) {
  const auto& prior = require_discrete(model.prior, "elbo_tilt");
  const auto& X = model.data.X;
  const auto& fam = model.family;
  const Eigen::Index p = X.cols(), n = X.rows();
  if (u.size() != p || d.size() != p) throw ShapeError("elbo_tilt: u and d must have length p");
  const double b2z = fam.b2_at_zero();

  const ProductTilt Q = ProductTilt::from_means(prior, {u.data(), static_cast<std::size_t>(p)},
                                                {d.data(), static_cast<std::size_t>(p)}, b2z);
  const auto q = Q.probability_table();
  Vector mean(p), var(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    mean[j] = c_dot(prior, Q.params[static_cast<std::size_t>(j)]);
    var[j] = c_ddot(prior, Q.params[static_cast<std::size_t>(j)]);
  }
  const double linear = model.data.y.dot(X * mean);
  const double kl = product_kl(prior, {u.data(), static_cast<std::size_t>(p)},
                               {d.data(), static_cast<std::size_t>(p)}, b2z);

  Estimate eb;
  if (fam.kind() == FamilyKind::linear) {
    const Vector m = X * mean;
    const Vector s2 = X.array().square().matrix() * var;
    eb.value = 0.5 * (m.squaredNorm() + s2.sum());
    eb.exact = true;
  } else if (use_enumeration(prior, p, cfg)) {
    eb.value = expected_log_normalizer_exact(fam, X, prior.support(), q, cfg.enumeration_cap);
    eb.exact = true;
  } else {
    const Matrix U = base_uniforms(p, cfg, Stream::evaluation);
    const auto S = U.rows();
    Matrix vals(S, 1);
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t s_idx) {
      const auto s = static_cast<Eigen::Index>(s_idx);
      Vector sigma(p);
      for (Eigen::Index j = 0; j < p; ++j)
        sigma[j] = prior.support()[sample_index(q[static_cast<std::size_t>(j)], U(s, j))];
      const Vector theta = X * sigma;
      double acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) acc += fam.b(theta[i]);
      vals(s, 0) = acc;
    });
    Vector m, se;
    mean_se(vals, cfg.antithetic, m, se);
    eb.value = m[0];
    eb.se = se[0];
  }
  return {linear - eb.value - kl, eb.se, eb.exact};
}

TiltFit fit_tilt(const Model& model, const MCConfig& cfg, const TiltFitOptions& opt) {
  const auto& prior = require_discrete(model.prior, "fit_tilt");
  validate(model.data, model.family);
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw ParameterError("fit_tilt: damping must lie in (0, 1]");
  const Eigen::Index p = model.data.p();
  Vector u0 = opt.u0.size() ? opt.u0 : Vector::Zero(p);
  if (u0.size() != p) throw ShapeError("fit_tilt: u0 has the wrong length");
  u0 = u0.cwiseMax(prior.min()).cwiseMin(prior.max());

  const TiltContext ctx(model, cfg);
  TiltFit fit;
  fit.state = make_tilt_state(model, u0);
  auto record = [&](const TiltState& st) {
    TiltTraceEntry e{st.u, st.v, 0.0};
    if (opt.trace_elbo) e.elbo = elbo_tilt(model, st.u, st.d, cfg).value;
    fit.trace.push_back(std::move(e));
  };
  record(fit.state);
  for (int t = 1; t <= opt.max_iter; ++t) {
    TiltState next = ctx.update(fit.state, opt.damping);
    const double change = (next.u - fit.state.u).lpNorm<Eigen::Infinity>();
    fit.state = std::move(next);
    fit.iterations = t;
    record(fit.state);
    if (change < opt.tol_u) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged && opt.trace_elbo) {
    const auto best = std::max_element(fit.trace.begin(), fit.trace.end(),
                                       [](const auto& a, const auto& b) { return a.elbo < b.elbo; });
    fit.state.u = best->u;
    fit.state.v = best->v;
  }
  return fit;
}

SeparationProbe well_separation_probe(const Model& model, const MCConfig& cfg, const TiltFitOptions& opt,
                                      int starts, std::uint64_t seed, double threshold) {
  const auto& prior = require_discrete(model.prior, "well_separation_probe");
  const Eigen::Index p = model.data.p();
  SeparationProbe probe;
  for (int r = 0; r < starts; ++r) {
    CounterRng rng(stream_seed(seed, Stream::solver), {0x5e9aULL, static_cast<std::uint64_t>(r)});
    TiltFitOptions o = opt;
    o.trace_elbo = false;
    o.u0.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) o.u0[j] = prior.min() + (prior.max() - prior.min()) * rng.uniform();
    probe.fitted_means.push_back(fit_tilt(model, cfg, o).state.u);
  }
  for (std::size_t a = 0; a < probe.fitted_means.size(); ++a)
    for (std::size_t b = a + 1; b < probe.fitted_means.size(); ++b)
      probe.max_pairwise_sq_dist =
          std::max(probe.max_pairwise_sq_dist,
                   (probe.fitted_means[a] - probe.fitted_means[b]).squaredNorm() / static_cast<double>(p));
  probe.multimodality_detected = probe.max_pairwise_sq_dist >= threshold;
  return probe;
}

}  // namespace nmfvi
