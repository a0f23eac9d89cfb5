"""Gaussian lower bounds on mutual information and IB curves."""

from ._core import (
    ConditioningError,
    DomainError,
    GaussboundError,
    InsufficientDataError,
    InvalidCovarianceError,
    ModelSpec,
    ParameterError,
    UnsupportedModelError,
    ace_fit,
    agce_fit_1d,
    default_anneal_schedule,
    discrete_mi,
    experiment_ids,
    gaussian_bound,
    gib_curve,
    gib_spectrum,
    gm1d_true_mi,
    marginal_gaussianize,
    model_true_mi,
    nats_to_bits,
    quadrature_discretize,
    reverse_anneal,
    run_criterion,
    run_method,
    sample_model,
)

__all__ = [name for name in dir() if not name.startswith("_")]
