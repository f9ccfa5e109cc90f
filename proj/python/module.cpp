#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nmfvi/design.hpp"
#include "nmfvi/error.hpp"
#include "nmfvi/eval.hpp"
#include "nmfvi/gauss.hpp"
#include "nmfvi/gibbs.hpp"
#include "nmfvi/jj.hpp"
#include "nmfvi/oracle.hpp"
#include "nmfvi/parallel.hpp"
#include "nmfvi/simulate.hpp"
#include "nmfvi/tilt_solver.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace nmfvi;

namespace {

MCConfig mc_config(std::size_t n_samples, std::uint64_t seed, std::size_t enumeration_cap) {
  MCConfig c;
  c.n_samples = n_samples;
  c.seed = seed;
  c.enumeration_cap = enumeration_cap;
  c.validate();
  return c;
}

py::tuple estimate(const Estimate& e) { return py::make_tuple(e.value, e.se, e.exact); }

// DiscretePrior has no default constructor, which the std::variant caster needs.
PriorSpec to_prior(const py::handle& h) {
  if (py::isinstance<DiscretePrior>(h)) return h.cast<DiscretePrior>();
  if (py::isinstance<StandardGaussianPrior>(h)) return StandardGaussianPrior{};
  throw ParameterError("prior must be DiscretePrior or GaussianPrior");
}

py::object from_prior(const PriorSpec& p) {
  return std::visit([](const auto& v) { return py::cast(v); }, p);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mean-field variational inference for GLMs with discrete or Gaussian priors";

  // Translators are tried newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_MemoryError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_TypeError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);

  py::class_<GlmFamily>(m, "Family")
      .def_static("linear", &GlmFamily::linear)
      .def_static("logistic", &GlmFamily::logistic)
      .def_static("binomial", &GlmFamily::binomial, "trials"_a)
      .def_static("from_name", &GlmFamily::from_name, "name"_a, "trials"_a = 1)
      .def_property_readonly("name", &GlmFamily::name)
      .def_property_readonly("trials", &GlmFamily::trials)
      .def("b", &GlmFamily::b)
      .def("b1", &GlmFamily::b1)
      .def("b2", &GlmFamily::b2)
      .def("__repr__", [](const GlmFamily& f) { return "Family(" + f.name() + ")"; });

  py::class_<DiscretePrior>(m, "DiscretePrior")
      .def(py::init<std::vector<double>, std::vector<double>>(), "support"_a, "probs"_a)
      .def_static("three_point", &DiscretePrior::three_point, "p_minus"_a, "p_zero"_a, "p_plus"_a)
      .def_property_readonly("support", &DiscretePrior::support)
      .def_property_readonly("probs", &DiscretePrior::probs)
      .def("mean", &DiscretePrior::mean);

  py::class_<StandardGaussianPrior>(m, "GaussianPrior").def(py::init<>());

  py::class_<Model>(m, "Model")
      .def(py::init([](const GlmFamily& fam, Matrix X, Vector y, const py::object& prior) {
             if (X.rows() != y.size()) throw ShapeError("X and y disagree on the number of rows");
             return Model{fam, Dataset{std::move(X), std::move(y)}, to_prior(prior)};
           }),
           "family"_a, "X"_a, "y"_a, "prior"_a)
      .def_property_readonly("family", [](const Model& md) { return md.family; })
      .def_property_readonly("X", [](const Model& md) { return md.data.X; })
      .def_property_readonly("y", [](const Model& md) { return md.data.y; })
      .def_property_readonly("prior", [](const Model& md) { return from_prior(md.prior); })
      .def_property_readonly("n", [](const Model& md) { return md.data.n(); })
      .def_property_readonly("p", [](const Model& md) { return md.data.p(); });

  m.def("set_num_threads", &set_num_threads, "threads"_a);

  // Designs and simulation.
  m.def("make_block_design", &make_block_design, "n"_a, "p"_a, "seed"_a = 0);
  m.def(
      "make_gaussian_design",
      [](Eigen::Index n, Eigen::Index p, std::uint64_t seed, double scale, std::optional<Matrix> cov) {
        return make_gaussian_design(n, p, seed, scale, cov);
      },
      "n"_a, "p"_a, "seed"_a = 0, "scale"_a = 1.0, "covariance"_a = py::none());
  m.def(
      "draw_beta",
      [](const py::object& prior, Eigen::Index p, std::uint64_t seed) { return draw_beta(to_prior(prior), p, seed); },
      "prior"_a, "p"_a, "seed"_a = 0);
  m.def(
      "draw_response", [](const GlmFamily& f, const Vector& theta, std::uint64_t seed) {
        return draw_response(f, theta, seed);
      },
      "family"_a, "theta"_a, "seed"_a = 0);
  m.def("hamiltonian", [](const Model& md, const Vector& beta) { return hamiltonian(md.family, md.data, beta); },
        "model"_a, "beta"_a);

  // Discrete prior: tilt fixed point.
  m.def(
      "fit_tilt",
      [](const Model& md, std::size_t n_samples, std::uint64_t seed, std::size_t enumeration_cap, double damping,
         int max_iter, double tol, std::optional<Vector> u0) {
        TiltFitOptions o;
        o.damping = damping;
        o.max_iter = max_iter;
        o.tol_u = tol;
        o.trace_elbo = false;
        if (u0) o.u0 = *u0;
        const auto f = fit_tilt(md, mc_config(n_samples, seed, enumeration_cap), o);
        return py::dict("u"_a = f.state.u, "v"_a = f.state.v, "d"_a = f.state.d, "converged"_a = f.converged,
                        "iterations"_a = f.iterations);
      },
      "model"_a, "n_samples"_a = 2000, "seed"_a = 0, "enumeration_cap"_a = 0, "damping"_a = 0.5,
      "max_iter"_a = 500, "tol"_a = 1e-5, "u0"_a = py::none(),
      "Fit the product-of-tilts approximation. Returns a dict with u, v, d, converged, iterations.");
  m.def(
      "elbo_tilt",
      [](const Model& md, const Vector& u, const Vector& d, std::size_t n_samples, std::uint64_t seed,
         std::size_t enumeration_cap) {
        return estimate(elbo_tilt(md, u, d, mc_config(n_samples, seed, enumeration_cap)));
      },
      "model"_a, "u"_a, "d"_a, "n_samples"_a = 20000, "seed"_a = 0, "enumeration_cap"_a = 0,
      "(value, se, exact) of the mean-field objective at means u and scales d.");

  // Gaussian prior.
  m.def(
      "fit_gauss",
      [](const Model& md, std::size_t n_samples, std::uint64_t seed, double v_min, int max_iter) {
        GaussFitOptions o;
        o.v_min = v_min;
        o.max_iter = max_iter;
        const auto f = fit_gauss(md, mc_config(n_samples, seed, 0), o);
        return py::dict("u"_a = f.state.u, "v"_a = f.state.v, "elbo"_a = estimate(f.elbo),
                        "converged"_a = f.converged, "iterations"_a = f.iterations);
      },
      "model"_a, "n_samples"_a = 2000, "seed"_a = 0, "v_min"_a = 1e-6, "max_iter"_a = 500);
  m.def(
      "fit_jj",
      [](const Model& md, double tol_xi, int max_iter) {
        JJFitOptions o;
        o.tol_xi = tol_xi;
        o.max_iter = max_iter;
        const auto f = fit_jj(md, GaussianPrior::standard(md.data.p()), o);
        return py::dict("u"_a = f.state.u, "Sigma"_a = f.state.Sigma, "xi"_a = f.state.xi,
                        "bound"_a = f.bound_trace.back(), "converged"_a = f.converged, "iterations"_a = f.iterations);
      },
      "model"_a, "tol_xi"_a = 1e-8, "max_iter"_a = 1000, "Tangent-bound fit for logistic regression.");

  // Reference posterior.
  m.def(
      "posterior_mean",
      [](const Model& md, int chains, int sweeps, int burn_in, std::uint64_t seed, int keep_every) {
        GibbsOptions o{chains, sweeps, burn_in, seed, keep_every};
        auto r = posterior_mean(md, o);
        return py::dict("mean"_a = r.mean, "chain_means"_a = r.chain_means,
                        "split_disagreement"_a = r.split_disagreement, "samples"_a = r.samples);
      },
      "model"_a, "chains"_a = 4, "sweeps"_a = 5000, "burn_in"_a = 1000, "seed"_a = 0, "keep_every"_a = 0);
  m.def(
      "enumerate_logz", [](const Model& md, std::size_t cap) { return enumerate_logz(md, cap); }, "model"_a,
      "cap"_a = kEnumerationCap);
  m.def(
      "enumerate_posterior",
      [](const Model& md, std::size_t cap) {
        const auto r = enumerate_posterior(md, cap);
        return py::dict("log_z"_a = r.log_z, "mean"_a = r.mean, "marginals"_a = r.marginals);
      },
      "model"_a, "cap"_a = kEnumerationCap);
  m.def(
      "quadrature_logz", [](const Model& md, int nodes) { return quadrature_logz(md, nodes); }, "model"_a,
      "nodes"_a = 64);

  // Diagnostics and evaluation.
  m.def(
      "diagnose",
      [](const Model& md, std::uint64_t seed, int random_probes) {
        DiagnosticsOptions o;
        o.seed = seed;
        o.random_probes = random_probes;
        const auto r = diagnose(md.family, md.data, o);
        return py::dict("opnorm_xtx"_a = r.opnorm_xtx, "max_diag_xtx"_a = r.max_diag_xtx,
                        "entry_tail"_a = r.entry_tail, "frob_tail"_a = r.frob_tail,
                        "subset_gram_upper_bound"_a = r.subset_gram_upper_bound,
                        "trace_A_sq_zero"_a = r.trace_A_sq_zero, "trace_A_sq_max"_a = r.trace_A_sq_max,
                        "trace_A_sq_mean"_a = r.trace_A_sq_mean, "score_norm"_a = r.score_norm);
      },
      "model"_a, "seed"_a = 0, "random_probes"_a = 20);
  m.def(
      "trace_A_sq",
      [](const GlmFamily& f, const Matrix& X, const Vector& beta) { return trace_A_sq(f, X, beta); }, "family"_a,
      "X"_a, "beta"_a);
  m.def("mse", &mse, "u_hat"_a, "beta_star"_a);
  m.def(
      "credible_intervals",
      [](const Model& md, const Vector& u, const Vector& d, double alpha, double epsilon) {
        std::vector<std::pair<double, double>> out;
        for (const auto& iv : credible_intervals(require_discrete(md.prior, "credible_intervals"), u, d,
                                                 md.family.b2_at_zero(), alpha, epsilon))
          out.emplace_back(iv.lo, iv.hi);
        return out;
      },
      "model"_a, "u"_a, "d"_a, "alpha"_a = 0.1, "epsilon"_a = 0.05,
      "Open intervals (lo, hi) per coordinate from a tilt fit.");
  m.def(
      "average_coverage",
      [](const std::vector<Vector>& samples, const std::vector<std::pair<double, double>>& intervals,
         double threshold) {
        std::vector<Interval> iv;
        for (const auto& [lo, hi] : intervals) iv.push_back({lo, hi});
        const auto r = average_coverage(samples, iv, threshold);
        return py::dict("mean"_a = r.mean, "min"_a = r.min, "exceedance"_a = r.exceedance,
                        "threshold"_a = r.threshold, "per_draw"_a = r.per_draw);
      },
      "samples"_a, "intervals"_a, "threshold"_a);
  m.def("w1_empirical", &w1_empirical, "a"_a, "b"_a);
}
