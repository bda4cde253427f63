"""Spectral density estimation for symmetric operators.

The heavy lifting lives in the compiled ``_specden`` module: stochastic
Lanczos quadrature, exact dense oracles, the Chebyshev-moment baseline,
spectral metrics and the quadratic-model simulator.
"""

from specden._specden import (
    InvalidInputError,
    NumericFailureError,
    ResourceLimitError,
    chebyshev_density,
    concentration_epsilon,
    eigh,
    eigvalsh,
    estimate_density,
    estimate_density_operator,
    exact_smoothed_density,
    gd_trajectory,
    golub_welsch,
    l1_distance,
    lanczos,
    mlp_exact_hessian,
    mlp_hvp,
    mlp_param_count,
    path_alignment,
    projection_ratio,
    sgd_alignment_closed_form,
    sgd_alignment_limit,
    sgd_alignment_montecarlo,
    signed_energy,
    synth_dataset,
    train_mlp,
    zeta,
)

__all__ = [
    "InvalidInputError",
    "NumericFailureError",
    "ResourceLimitError",
    "chebyshev_density",
    "concentration_epsilon",
    "eigh",
    "eigvalsh",
    "estimate_density",
    "estimate_density_operator",
    "exact_smoothed_density",
    "gd_trajectory",
    "golub_welsch",
    "l1_distance",
    "lanczos",
    "mlp_exact_hessian",
    "mlp_hvp",
    "mlp_param_count",
    "path_alignment",
    "projection_ratio",
    "sgd_alignment_closed_form",
    "sgd_alignment_limit",
    "sgd_alignment_montecarlo",
    "signed_energy",
    "synth_dataset",
    "train_mlp",
    "zeta",
]
