#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "nmfvi/error.hpp"
#include "nmfvi/eval.hpp"
#include "nmfvi/io.hpp"
#include "nmfvi/oracle.hpp"
#include "nmfvi/simulate.hpp"

namespace cli {
namespace fs = std::filesystem;
using namespace nmfvi;

namespace {

struct Problem {
  Model model;
  std::optional<Vector> beta_star;
  std::uint64_t seed;
};

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

PriorSpec make_prior(const PriorConfig& c) {
  if (c.kind == "gaussian") return StandardGaussianPrior{};
  return DiscretePrior(c.support, c.probs);
}

std::uint64_t replicate_seed(const Config& c, int r) { return c.seed + static_cast<std::uint64_t>(r); }

Problem load_problem(const Config& c, int r) {
  const auto family = GlmFamily::from_name(c.family, c.trials);
  const PriorSpec prior = make_prior(c.prior);
  const std::uint64_t seed = replicate_seed(c, r);
  if (c.design.kind == "file") {
    if (c.design.X.empty() || c.design.y.empty())
      throw ParameterError("config: design.kind = file needs design.X and design.y");
    Dataset d{io::read_matrix_csv(c.design.X), io::read_vector_csv(c.design.y)};
    if (d.y.size() != d.X.rows()) throw ShapeError("y has " + std::to_string(d.y.size()) + " rows, X has " + std::to_string(d.X.rows()));
    std::optional<Vector> beta;
    if (!c.design.beta_star.empty()) beta = io::read_vector_csv(c.design.beta_star);
    return {Model{family, std::move(d), prior}, beta, seed};
  }
  if (c.design.n < 1 || c.design.p < 1) throw ParameterError("config: design.n and design.p must be positive");
  Matrix X = c.design.kind == "block" ? make_block_design(c.design.n, c.design.p, seed)
                                      : make_gaussian_design(c.design.n, c.design.p, seed, c.design.scale);
  Vector beta = draw_beta(prior, c.design.p, seed);
  Vector y = draw_response(family, X * beta, seed);
  return {Model{family, Dataset{std::move(X), std::move(y)}, prior}, beta, seed};
}

// Methods and priors that go together.
void check_pairing(const std::string& method, const Model& m) {
  const std::string kind = prior_kind(m.prior);
  auto fail = [&](const std::string& need) {
    throw UnsupportedError("pairing error: method '" + method + "' requires " + need + ", config has a " + kind +
                           " prior");
  };
  if (method == "tilt" || method == "gibbs") {
    if (!std::holds_alternative<DiscretePrior>(m.prior)) fail("a discrete prior");
  } else if (method == "gauss") {
    if (!std::holds_alternative<StandardGaussianPrior>(m.prior)) fail("a gaussian prior");
  } else if (method == "jj") {
    if (!std::holds_alternative<StandardGaussianPrior>(m.prior)) fail("a gaussian prior");
    if (m.family.kind() != FamilyKind::logistic)
      throw UnsupportedError("pairing error: method 'jj' requires the logistic family, config has " + m.family.name());
  } else {
    throw ParameterError("unknown method '" + method + "' (expected tilt, gauss, jj or gibbs)");
  }
}

MCConfig mc_for(const Config& c, std::uint64_t seed) {
  MCConfig mc = c.mc;
  mc.seed = seed;
  return mc;
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}, {"exact", e.exact}}; }

json fit_one(const Config& c, const Problem& pb) {
  const Model& m = pb.model;
  const std::string& method = c.method;
  check_pairing(method, m);
  const MCConfig mc = mc_for(c, pb.seed);
  const auto t0 = std::chrono::steady_clock::now();

  json out;
  out["method"] = method;
  json extra;
  Vector u;
  if (method == "tilt") {
    const auto fit = fit_tilt(m, mc, c.tilt);
    u = fit.state.u;
    const auto e = elbo_tilt(m, fit.state.u, fit.state.d, mc);
    out["elbo_or_logz_estimate"] = estimate_json(e);
    out["converged"] = fit.converged;
    out["iterations"] = fit.iterations;
    extra["v"] = to_std(fit.state.v);
    extra["d"] = to_std(fit.state.d);
    out["solver_options"] = {{"damping", c.tilt.damping},
                             {"max_iter", c.tilt.max_iter},
                             {"tol_u", c.tilt.tol_u},
                             {"trace_elbo", c.tilt.trace_elbo}};
  } else if (method == "gauss") {
    const auto fit = fit_gauss(m, mc, c.gauss);
    u = fit.state.u;
    out["elbo_or_logz_estimate"] = estimate_json(fit.elbo);
    out["converged"] = fit.converged;
    out["iterations"] = fit.iterations;
    extra["v"] = to_std(fit.state.v);
    extra["projected_gradient_norm"] = fit.pg_norm;
    out["solver_options"] = {{"v_min", c.gauss.v_min},
                             {"max_iter", c.gauss.max_iter},
                             {"tol", c.gauss.tol},
                             {"memory", c.gauss.memory}};
  } else if (method == "jj") {
    const auto prior = GaussianPrior::standard(m.data.p());
    const auto fit = fit_jj(m, prior, c.jj);
    u = fit.state.u;
    out["elbo_or_logz_estimate"] = estimate_json(jj_objective_mc(m, fit.state, prior, mc));
    out["converged"] = fit.converged;
    out["iterations"] = fit.iterations;
    extra["sigma_diag"] = to_std(fit.state.Sigma.diagonal());
    extra["bound"] = fit.bound_trace.empty() ? 0.0 : fit.bound_trace.back();
    out["solver_options"] = {{"tol_xi", c.jj.tol_xi}, {"max_iter", c.jj.max_iter}};
  } else {
    GibbsOptions g = c.gibbs;
    g.seed = pb.seed;
    const auto r = posterior_mean(m, g);
    u = r.mean;
    out["elbo_or_logz_estimate"] = nullptr;
    // A fixed-length run; "converged" reports whether half-chain means agree.
    out["converged"] = r.split_disagreement < 0.05;
    out["iterations"] = g.sweeps;
    json chains = json::array();
    for (const auto& cm : r.chain_means) chains.push_back(to_std(cm));
    extra["chain_means"] = chains;
    extra["split_disagreement"] = r.split_disagreement;
    out["solver_options"] = {{"chains", g.chains}, {"sweeps", g.sweeps}, {"burn_in", g.burn_in}};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out["u"] = to_std(u);
  out["wallclock_seconds"] = c.record_wallclock ? json(secs) : json(nullptr);
  out["seed"] = pb.seed;
  if (method != "gibbs") {
    out["solver_options"]["mc"] = {{"n_samples", c.mc.n_samples},
                                   {"antithetic", c.mc.antithetic},
                                   {"enumeration_cap", c.mc.enumeration_cap}};
  }
  if (pb.beta_star && pb.beta_star->size() == u.size()) out["mse"] = mse(u, *pb.beta_star);
  for (auto& [k, v] : extra.items()) out[k] = v;
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParameterError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_json(const std::string& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

void write_manifest(const Config& c, const std::string& out_dir, const std::string& command) {
  json j = to_json(c);
  j["command"] = command;
  write_json(path_in(out_dir, "manifest.json"), j);
}

// One record for a single replicate, an array otherwise.
json collect(const Config& c, const std::function<json(int)>& one) {
  if (c.replicates == 1) return one(0);
  json arr = json::array();
  for (int r = 0; r < c.replicates; ++r) arr.push_back(one(r));
  return arr;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) return 0.0;
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

void cmd_simulate(const Config& c, const std::string& out_dir) {
  if (c.design.kind == "file") throw ParameterError("simulate needs design.kind block or gaussian");
  ensure_dir(out_dir);
  for (int r = 0; r < c.replicates; ++r) {
    const Problem pb = load_problem(c, r);
    const std::string sfx = c.replicates == 1 ? "" : "_" + std::to_string(r);
    io::write_matrix_csv(path_in(out_dir, "X" + sfx + ".csv"), pb.model.data.X);
    io::write_vector_csv(path_in(out_dir, "y" + sfx + ".csv"), pb.model.data.y);
    io::write_vector_csv(path_in(out_dir, "beta_star" + sfx + ".csv"), *pb.beta_star);
  }
  write_manifest(c, out_dir, "simulate");
}

void cmd_fit(const Config& c, const std::string& out_dir) {
  ensure_dir(out_dir);
  const json res = collect(c, [&](int r) { return fit_one(c, load_problem(c, r)); });
  write_json(path_in(out_dir, "fit.json"), res);
  write_manifest(c, out_dir, "fit");
}

void cmd_evidence(const Config& c, const std::string& out_dir) {
  ensure_dir(out_dir);
  std::ostringstream csv;
  csv << "replicate,p,n,method,estimate,se,gap_per_p,reference\n";
  json reps = json::array();
  for (int r = 0; r < c.replicates; ++r) {
    const Problem pb = load_problem(c, r);
    const Model& m = pb.model;
    const double p = static_cast<double>(m.data.p());

    for (const auto& method : c.evidence.methods) {
      if (method == "gibbs") throw UnsupportedError("evidence: the Gibbs sampler gives no evidence estimate");
      check_pairing(method, m);
    }

    std::optional<double> oracle;
    std::string oracle_name = "none";
    const bool discrete = std::holds_alternative<DiscretePrior>(m.prior);
    if (c.evidence.oracle != "none") {
      try {
        oracle = discrete ? enumerate_logz(m) : quadrature_logz(m);
        oracle_name = discrete ? "enumeration" : "quadrature";
      } catch (const CapacityError&) {
        if (c.evidence.oracle == "exact") throw;
      }
    }

    MCConfig eval = mc_for(c, pb.seed);
    eval.n_samples = c.evidence.evaluation_samples;
    struct Row {
      std::string method;
      Estimate est;
    };
    std::vector<Row> rows;
    for (const auto& method : c.evidence.methods) {
      Config one = c;
      one.method = method;
      const json f = fit_one(one, pb);
      Vector u = Eigen::Map<const Vector>(f["u"].get<std::vector<double>>().data(), m.data.p());
      Estimate e;
      if (method == "tilt") {
        const auto d = f["d"].get<std::vector<double>>();
        e = elbo_tilt(m, u, Eigen::Map<const Vector>(d.data(), m.data.p()), eval);
      } else if (method == "gauss") {
        const auto v = f["v"].get<std::vector<double>>();
        e = elbo_gauss_mc(m, GaussState{u, Eigen::Map<const Vector>(v.data(), m.data.p())}, eval, c.gauss.v_min);
      } else {
        const auto prior = GaussianPrior::standard(m.data.p());
        const auto fit = fit_jj(m, prior, c.jj);
        e = jj_objective_mc(m, fit.state, prior, eval);
      }
      rows.push_back({method, e});
    }

    // Without an oracle the tilt estimate (when present) is the reference.
    std::optional<double> ref = oracle;
    std::string ref_name = oracle_name;
    if (!ref) {
      for (const auto& row : rows)
        if (row.method == "tilt") {
          ref = row.est.value;
          ref_name = "tilt";
        }
    }
    json rj;
    rj["replicate"] = r;
    rj["seed"] = pb.seed;
    rj["oracle"] = oracle ? json(*oracle) : json(nullptr);
    rj["reference"] = ref_name;
    for (const auto& row : rows) {
      csv << r << ',' << m.data.p() << ',' << m.data.n() << ',' << row.method << ','
          << io::format_double(row.est.value) << ',' << io::format_double(row.est.se) << ',';
      if (ref) {
        const double gap = (row.est.value - *ref) / p;
        csv << io::format_double(gap);
        rj["gap_per_p"][row.method] = gap;
      }
      csv << ',' << ref_name << '\n';
      rj["estimates"][row.method] = estimate_json(row.est);
    }
    reps.push_back(rj);
  }
  io::write_text(path_in(out_dir, "evidence.csv"), csv.str());
  write_json(path_in(out_dir, "evidence.json"), json{{"replicates", reps}});
  write_manifest(c, out_dir, "evidence");
}

void cmd_diagnose(const Config& c, const std::string& out_dir) {
  ensure_dir(out_dir);
  const json res = collect(c, [&](int r) {
    const Problem pb = load_problem(c, r);
    DiagnosticsOptions opt = c.diagnostics;
    opt.seed = pb.seed;
    const auto d = diagnose(pb.model.family, pb.model.data, opt);
    auto pairs = [](const std::vector<std::pair<double, double>>& v) {
      json a = json::array();
      for (const auto& [k, x] : v) a.push_back({k, x});
      return a;
    };
    return json{{"seed", pb.seed},
                {"n", pb.model.data.n()},
                {"p", pb.model.data.p()},
                {"opnorm_xtx", d.opnorm_xtx},
                {"opnorm_converged", d.opnorm_converged},
                {"max_diag_xtx", d.max_diag_xtx},
                {"entry_tail", pairs(d.entry_tail)},
                {"frob_tail", pairs(d.frob_tail)},
                {"subset_gram_upper_bound", pairs(d.subset_gram_upper_bound)},
                {"trace_A_sq_zero", d.trace_A_sq_zero},
                {"trace_A_sq_max", d.trace_A_sq_max},
                {"trace_A_sq_mean", d.trace_A_sq_mean},
                {"trace_A_probes", d.trace_A_probes},
                {"score_norm", d.score_norm}};
  });
  write_json(path_in(out_dir, "diagnostics.json"), res);
  write_manifest(c, out_dir, "diagnose");
}

void cmd_coverage(const Config& c, const std::string& out_dir) {
  ensure_dir(out_dir);
  std::ostringstream draws;
  draws << "replicate,draw,coverage\n";
  json reps = json::array();
  double min_exceed = 1.0;
  for (int r = 0; r < c.replicates; ++r) {
    const Problem pb = load_problem(c, r);
    const Model& m = pb.model;
    if (!std::holds_alternative<DiscretePrior>(m.prior))
      throw UnsupportedError("pairing error: coverage requires a discrete prior, config has a gaussian prior");
    const auto& prior = std::get<DiscretePrior>(m.prior);
    const auto fit = fit_tilt(m, mc_for(c, pb.seed), c.tilt);
    GibbsOptions g = c.gibbs;
    g.seed = pb.seed;
    g.keep_every = std::max(g.keep_every, 1);
    const auto post = posterior_mean(m, g);
    const auto iv = credible_intervals(prior, fit.state.u, fit.state.d, m.family.b2_at_zero(), c.coverage.alpha,
                                       c.coverage.epsilon);
    const auto cov = average_coverage(post.samples, iv, coverage_threshold(c.coverage.alpha, c.coverage.slack));
    for (std::size_t k = 0; k < cov.per_draw.size(); ++k)
      draws << r << ',' << k << ',' << io::format_double(cov.per_draw[k]) << '\n';
    auto sorted = cov.per_draw;
    std::sort(sorted.begin(), sorted.end());
    json rj{{"replicate", r},
            {"seed", pb.seed},
            {"tilt_converged", fit.converged},
            {"draws", cov.per_draw.size()},
            {"mean", cov.mean},
            {"min", cov.min},
            {"quantiles",
             {{"0.05", quantile_sorted(sorted, 0.05)},
              {"0.25", quantile_sorted(sorted, 0.25)},
              {"0.5", quantile_sorted(sorted, 0.5)},
              {"0.75", quantile_sorted(sorted, 0.75)}}},
            {"threshold", cov.threshold},
            {"exceedance", cov.exceedance}};
    if (pb.beta_star) rj["truth_coverage"] = average_coverage({*pb.beta_star}, iv, cov.threshold).mean;
    min_exceed = std::min(min_exceed, cov.exceedance);
    reps.push_back(rj);
  }
  io::write_text(path_in(out_dir, "coverage_draws.csv"), draws.str());
  write_json(path_in(out_dir, "coverage.json"),
             json{{"alpha", c.coverage.alpha},
                  {"epsilon", c.coverage.epsilon},
                  {"slack", c.coverage.slack},
                  {"min_exceedance", min_exceed},
                  {"replicates", reps}});
  write_manifest(c, out_dir, "coverage");
}

}  // namespace cli
