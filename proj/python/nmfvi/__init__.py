"""Mean-field variational inference for GLMs with discrete or Gaussian priors."""

from ._core import (  # noqa: F401
    CapacityError,
    DiscretePrior,
    Error,
    Family,
    GaussianPrior,
    Model,
    ParameterError,
    UnsupportedError,
    average_coverage,
    credible_intervals,
    diagnose,
    draw_beta,
    draw_response,
    elbo_tilt,
    enumerate_logz,
    enumerate_posterior,
    fit_gauss,
    fit_jj,
    fit_tilt,
    hamiltonian,
    make_block_design,
    make_gaussian_design,
    mse,
    posterior_mean,
    quadrature_logz,
    set_num_threads,
    trace_A_sq,
    w1_empirical,
)


def simulate(family, X, prior, seed=0):
    """Draw beta from the prior and y from the family; returns (Model, beta)."""
    beta = draw_beta(prior, X.shape[1], seed)
    y = draw_response(family, X @ beta, seed)
    return Model(family, X, y, prior), beta
