"""Bayesian coregionalized spatial factor models with NNGP priors."""

from ._core import (
    BlmcError,
    PosteriorSamples,
    consistency_diagnostic,
    coverage,
    crps_gaussian,
    effective_range,
    ess,
    exponential_correlation,
    fit,
    interval_score,
    latent_posterior,
    load_samples,
    mcse,
    msel,
    neighbor_sets,
    nngp_factor,
    nngp_log_density,
    order_locations,
    predict,
    response_posterior,
    rmspe,
    simulate_fixture,
)

__all__ = [
    "BlmcError",
    "PosteriorSamples",
    "consistency_diagnostic",
    "coverage",
    "crps_gaussian",
    "effective_range",
    "ess",
    "exponential_correlation",
    "fit",
    "interval_score",
    "latent_posterior",
    "load_samples",
    "mcse",
    "msel",
    "neighbor_sets",
    "nngp_factor",
    "nngp_log_density",
    "order_locations",
    "predict",
    "response_posterior",
    "rmspe",
    "simulate_fixture",
]

__version__ = "0.1.0"
