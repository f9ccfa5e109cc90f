#include "doctest.h"
#include "helpers.hpp"

#include "nmfvi/oracle.hpp"
#include "nmfvi/tilt_solver.hpp"

using namespace nmfvi;
using namespace testutil;

namespace {

MCConfig mc(std::size_t n, std::uint64_t seed = 0, std::size_t cap = 0) {
  MCConfig c;
  c.n_samples = n;
  c.seed = seed;
  c.enumeration_cap = cap;
  return c;
}

}  // namespace

TEST_CASE("f_j on a zero design") {
  Model m{GlmFamily::logistic(), {Matrix::Zero(4, 3), random_binary(4, 1)}, default_prior()};
  const auto st = make_tilt_state(m, Vector{{0.2, -0.1, 0.0}});
  for (const auto& f : f_estimates(m, st, mc(100)))
    for (double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("f_j for the linear family") {
  const auto m = discrete_model(GlmFamily::linear(), 12, 4, 3);
  const auto st = make_tilt_state(m, Vector{{0.3, -0.4, 0.1, 0.5}});
  const auto& X = m.data.X;
  const auto prior = default_prior();
  const auto& sup = prior.support();
  const auto fe = f_estimates(m, st, mc(4000, 2));
  const auto fx = f_estimates(m, st, mc(4000, 2, 100000));
  for (Eigen::Index j = 0; j < 4; ++j) {
    // E[<x_i, sigma_{0,j}>] uses the tilted means of the other coordinates.
    Vector mean0 = st.u;
    mean0[j] = 0;
    const double lin = X.col(j).dot(X * mean0);
    for (std::size_t k = 0; k < 3; ++k) {
      const double s = sup[k];
      const double analytic = s * lin + s * s * st.d[j] / 2;
      const auto& f = fe[static_cast<std::size_t>(j)];
      CHECK(std::abs(f.values[k] - analytic) <= 3 * f.se[k] + 1e-12);
      CHECK(fx[static_cast<std::size_t>(j)].values[k] == doctest::Approx(analytic).epsilon(1e-10));
    }
  }
}

TEST_CASE("f_j against exact conditional expectations") {
  for (int inst = 0; inst < 3; ++inst) {
    const Eigen::Index p = 4 + inst;
    const auto m = discrete_model(GlmFamily::logistic(), 10, p, 60 + inst, 0.8);
    const Vector u = random_vector(p, 70 + inst, -0.6, 0.6);
    const auto st = make_tilt_state(m, u);
    const auto fe = f_estimates(m, st, mc(3000, inst));
    // Oracle: enumerate sigma ~ Q and average b(. with sigma_j = s) - b(. with sigma_j = 0).
    const auto& pr = default_prior();
    std::vector<std::vector<double>> q;
    for (Eigen::Index j = 0; j < p; ++j) q.push_back(tilt_pmf(pr, st.u[j], st.d[j], 0.25));
    for (Eigen::Index j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        double exact = 0;
        brute_force(m, [&](const Vector& b, double, double) {
          double w = 1;
          for (Eigen::Index l = 0; l < p; ++l)
            if (l != j) w *= q[static_cast<std::size_t>(l)][pr.index_of(b[l])];
          if (b[j] != 0) return;
          Vector bs = b;
          bs[j] = pr.support()[k];
          const Vector t0 = m.data.X * b, t1 = m.data.X * bs;
          for (Eigen::Index i = 0; i < t0.size(); ++i) exact += w * (m.family.b(t1[i]) - m.family.b(t0[i]));
        });
        const auto& f = fe[static_cast<std::size_t>(j)];
        CHECK(std::abs(f.values[k] - exact) <= 3 * f.se[k] + 1e-12);
        const auto fx = f_j_estimate(m, st, static_cast<std::size_t>(j), mc(10, 0, 1000000));
        CHECK(fx.values[k] == doctest::Approx(exact).epsilon(1e-11));
      }
    }
  }
  const auto m = discrete_model(GlmFamily::logistic(), 4, 2, 1);
  CHECK_THROWS_AS(f_j_estimate(m, make_tilt_state(m, Vector::Zero(2)), 2, mc(10)), RangeError);
}

TEST_CASE("tilt_update basics") {
  Model zero{GlmFamily::logistic(), {Matrix::Zero(5, 3), random_binary(5, 2)}, default_prior()};
  const auto s0 = make_tilt_state(zero, Vector::Zero(3));
  const auto s1 = tilt_update(zero, s0, mc(50), 0.5);
  CHECK(s1.u.norm() == 0.0);
  CHECK(s1.v.norm() == 0.0);
  CHECK(stationarity_residual(zero, s0, mc(50)) == 0.0);

  // Orthogonal columns and X^T y = 0 keep u = 0 invariant.
  Matrix X = Matrix::Zero(4, 2);
  X(0, 0) = 1;
  X(1, 0) = -1;
  X(2, 1) = 0.5;
  X(3, 1) = -0.5;
  Model orth{GlmFamily::logistic(), {X, Vector::Ones(4)}, default_prior()};
  const auto o1 = tilt_update(orth, make_tilt_state(orth, Vector::Zero(2)), mc(200), 1.0);
  CHECK(o1.u.lpNorm<Eigen::Infinity>() < 1e-12);

  const auto m = discrete_model(GlmFamily::logistic(), 20, 5, 4, 0.4);
  const auto st = make_tilt_state(m, random_vector(5, 1, -0.5, 0.5));
  const auto next = tilt_update(m, st, mc(300), 0.5);
  for (Eigen::Index j = 0; j < 5; ++j)
    CHECK(std::abs(c_dot(default_prior(), {next.v[j], next.d[j], 0.25}) - next.u[j]) < 1e-8);
  CHECK_THROWS_AS(tilt_update(m, st, mc(300), 0.0), ParameterError);
  CHECK_THROWS_AS(tilt_update(m, st, mc(300), 1.5), ParameterError);
}

TEST_CASE("degenerate tilt names the coordinate") {
  const auto m = discrete_model(GlmFamily::logistic(), 6, 3, 5);
  TiltState st = make_tilt_state(m, Vector::Zero(3));
  st.v[1] = 80;
  st.d[1] = 0;
  st.u[1] = c_dot(default_prior(), {80, 0, 0.25});
  try {
    tilt_update(m, st, mc(20), 0.5);
    FAIL("expected a degenerate tilt error");
  } catch (const DegenerateTiltError& e) {
    CHECK(e.coordinate() == 1);
  }
}

TEST_CASE("fit_tilt on a zero design") {
  Model zero{GlmFamily::logistic(), {Matrix::Zero(5, 3), random_binary(5, 2)}, default_prior()};
  const auto fit = fit_tilt(zero, mc(100));
  CHECK(fit.converged);
  CHECK(fit.iterations == 1);
  CHECK(fit.state.u.norm() == 0.0);
  CHECK(fit.trace.size() == 2);
  CHECK(fit.trace.back().elbo == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("converged fit maximises the exact objective on a grid") {
  SUBCASE("p = 2, full grid") {
    for (int inst = 0; inst < 3; ++inst) {
      const auto m = discrete_model(GlmFamily::logistic(), 30, 2, 90 + inst, 0.5);
      const auto fit = fit_tilt(m, mc(10, 0, 100000));
      REQUIRE(fit.converged);
      double best = -1e300;
      Vector arg(2);
      for (double a = -0.99; a < 0.995; a += 0.02)
        for (double b = -0.99; b < 0.995; b += 0.02) {
          const double v = exact_nmf_objective(m, Vector{{a, b}});
          if (v > best) {
            best = v;
            arg = Vector{{a, b}};
          }
        }
      CHECK((arg - fit.state.u).lpNorm<Eigen::Infinity>() <= 0.02);
      CHECK(exact_nmf_objective(m, fit.state.u) >= best - 1e-9);
    }
  }
  SUBCASE("p = 4, coordinate-wise grid ascent") {
    const auto m = discrete_model(GlmFamily::logistic(), 40, 4, 95, 0.5);
    const auto fit = fit_tilt(m, mc(10, 0, 100000));
    REQUIRE(fit.converged);
    Vector u = Vector::Zero(4);
    for (int sweep = 0; sweep < 20; ++sweep) {
      const Vector prev = u;
      for (int j = 0; j < 4; ++j) {
        double best = -1e300, arg = 0;
        for (double a = -0.99; a < 0.995; a += 0.02) {
          Vector c = u;
          c[j] = a;
          const double v = exact_nmf_objective(m, c);
          if (v > best) {
            best = v;
            arg = a;
          }
        }
        u[j] = arg;
      }
      if ((u - prev).norm() == 0) break;
    }
    CHECK((u - fit.state.u).lpNorm<Eigen::Infinity>() <= 0.02);
  }
}

TEST_CASE("stationarity residual") {
  const auto m = discrete_model(GlmFamily::logistic(), 40, 6, 12, 0.5);
  const auto cfg = mc(10000, 1);
  const auto fit = fit_tilt(m, cfg);
  REQUIRE(fit.converged);
  const double at_fit = stationarity_residual(m, fit.state, cfg);
  CHECK(at_fit < 1e-2);
  const auto other = make_tilt_state(m, random_vector(6, 77, -0.8, 0.8));
  CHECK(stationarity_residual(m, other, cfg) > at_fit);
}

TEST_CASE("elbo_tilt") {
  Model zero{GlmFamily::logistic(), {Matrix::Zero(5, 3), random_binary(5, 2)}, default_prior()};
  const Vector d0 = Vector::Zero(3);
  CHECK(std::abs(elbo_tilt(zero, Vector::Zero(3), d0, mc(50)).value) < 1e-14);

  for (int inst = 0; inst < 5; ++inst) {
    const Eigen::Index p = 3 + inst;
    const auto fam = inst % 2 ? GlmFamily::binomial(2) : GlmFamily::logistic();
    const auto m = discrete_model(fam, 15, p, 100 + inst, 0.7);
    const Vector u = random_vector(p, 110 + inst, -0.7, 0.7);
    const Vector d = tilt_scales(m.data.X);
    const auto mcv = elbo_tilt(m, u, d, mc(5000, inst));
    const auto ex = elbo_tilt(m, u, d, mc(10, 0, 1000000));
    CHECK(ex.exact);
    CHECK(ex.value == doctest::Approx(exact_nmf_objective(m, u)).epsilon(1e-10));
    CHECK(std::abs(mcv.value - ex.value) <= 3 * mcv.se);
    CHECK(mcv.value <= brute_logz(m) + 3 * mcv.se);
  }
  const auto lin = discrete_model(GlmFamily::linear(), 10, 3, 7);
  const Vector u = random_vector(3, 8, -0.5, 0.5);
  const auto e = elbo_tilt(lin, u, tilt_scales(lin.data.X), mc(10));
  CHECK(e.exact);
  CHECK(e.value == doctest::Approx(exact_nmf_objective(lin, u)).epsilon(1e-10));
}

TEST_CASE("determinism and sign-flip equivariance") {
  const auto m = discrete_model(GlmFamily::logistic(), 60, 8, 21, 0.4);
  const auto cfg = mc(400, 3);
  const auto a = fit_tilt(m, cfg), b = fit_tilt(m, cfg);
  CHECK(a.iterations == b.iterations);
  CHECK((a.state.u - b.state.u).norm() == 0.0);
  Model flipped = m;
  flipped.data.X = -m.data.X;
  const auto c = fit_tilt(flipped, cfg);
  CHECK((a.state.u + c.state.u).lpNorm<Eigen::Infinity>() < 0.05);
  const auto exact = fit_tilt(m, mc(10, 0, 100000)), exact_f = fit_tilt(flipped, mc(10, 0, 100000));
  CHECK((exact.state.u + exact_f.state.u).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("non-convergence returns the best traced iterate") {
  const auto m = discrete_model(GlmFamily::logistic(), 30, 5, 31, 0.6);
  TiltFitOptions opt;
  opt.max_iter = 2;
  opt.tol_u = 1e-14;
  const auto fit = fit_tilt(m, mc(200), opt);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 2);
  double best = -1e300;
  for (const auto& e : fit.trace) best = std::max(best, e.elbo);
  CHECK(elbo_tilt(m, fit.state.u, fit.state.d, mc(200)).value == doctest::Approx(best));
}

TEST_CASE("well-separation probe") {
  const auto m = discrete_model(GlmFamily::logistic(), 40, 5, 41, 0.4);
  const auto probe = well_separation_probe(m, mc(10, 0, 100000), {}, 5, 1);
  CHECK(probe.fitted_means.size() == 5);
  CHECK(probe.max_pairwise_sq_dist < 0.01);
  CHECK_FALSE(probe.multimodality_detected);
}

TEST_CASE("Gaussian prior is rejected") {
  Model g{GlmFamily::logistic(), {Matrix::Zero(2, 2), Vector::Zero(2)}, StandardGaussianPrior{}};
  CHECK_THROWS_AS(fit_tilt(g, mc(10)), UnsupportedError);
}
