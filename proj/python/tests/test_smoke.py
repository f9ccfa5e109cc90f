import numpy as np
import pytest

import nmfvi


def small_model(p=4, n=30, seed=1, prior=None):
    X = nmfvi.make_gaussian_design(n, p, seed, scale=4.0)
    prior = prior if prior is not None else nmfvi.DiscretePrior.three_point(0.2, 0.6, 0.2)
    return nmfvi.simulate(nmfvi.Family.logistic(), X, prior, seed)


def test_tilt_fit_is_a_lower_bound():
    model, _ = small_model()
    fit = nmfvi.fit_tilt(model, n_samples=1000)
    assert fit["converged"]
    assert fit["u"].shape == (4,)
    value, se, exact = nmfvi.elbo_tilt(model, fit["u"], fit["d"], enumeration_cap=100)
    assert exact and se == 0.0
    assert value <= nmfvi.enumerate_logz(model) + 1e-12


def test_fits_are_deterministic():
    model, _ = small_model(p=6)
    a = nmfvi.fit_tilt(model, seed=3)
    b = nmfvi.fit_tilt(model, seed=3)
    np.testing.assert_array_equal(a["u"], b["u"])


def test_gaussian_prior_methods_agree():
    model, _ = small_model(p=3, n=60, prior=nmfvi.GaussianPrior())
    jj = nmfvi.fit_jj(model)
    gs = nmfvi.fit_gauss(model, n_samples=2000)
    assert jj["converged"] and gs["converged"]
    assert np.corrcoef(jj["u"], gs["u"])[0, 1] > 0.95
    assert jj["bound"] <= nmfvi.quadrature_logz(model) + 1e-9


def test_gibbs_matches_enumeration():
    model, _ = small_model(p=3)
    post = nmfvi.posterior_mean(model, chains=2, sweeps=20000, burn_in=500, seed=2)
    exact = nmfvi.enumerate_posterior(model)
    assert np.max(np.abs(post["mean"] - exact["mean"])) < 0.03


def test_pairing_and_capacity_errors():
    model, _ = small_model(prior=nmfvi.GaussianPrior())
    with pytest.raises(TypeError):
        nmfvi.fit_tilt(model)
    big, _ = small_model(p=20)
    with pytest.raises(MemoryError):
        nmfvi.enumerate_logz(big, cap=1000)
    with pytest.raises(ValueError):
        nmfvi.DiscretePrior([-1.0, 1.0], [0.5])


def test_diagnostics_and_coverage():
    model, _ = small_model(p=8, n=200)
    report = nmfvi.diagnose(model)
    assert report["opnorm_xtx"] > 0
    fit = nmfvi.fit_tilt(model)
    iv = nmfvi.credible_intervals(model, fit["u"], fit["d"])
    assert len(iv) == 8 and all(lo < hi for lo, hi in iv)
    post = nmfvi.posterior_mean(model, sweeps=400, burn_in=100, keep_every=4)
    cov = nmfvi.average_coverage(post["samples"], iv, 0.85)
    assert 0.0 <= cov["mean"] <= 1.0
    assert len(cov["per_draw"]) == 4 * 75
