"""Robust extended Kalman filtering for joint state/parameter estimation.

Thin wrapper around the compiled core. Everything lives in ``rekf._core``;
this package re-exports the public names.
"""

from ._core import (  # noqa: F401
    GaussianBelief,
    NonlinearModel,
    NumericalError,
    SolverError,
    StepOutput,
    ThetaSolution,
    ekf_step,
    gamma,
    housner,
    joint_noise_positive_definite,
    kl_gaussian_zero_mean,
    rekf_step,
    robustify,
    run_filter,
    sim,
    solve_theta,
)

__all__ = [
    "GaussianBelief",
    "NonlinearModel",
    "NumericalError",
    "SolverError",
    "StepOutput",
    "ThetaSolution",
    "ekf_step",
    "gamma",
    "housner",
    "joint_noise_positive_definite",
    "kl_gaussian_zero_mean",
    "rekf_step",
    "robustify",
    "run_filter",
    "sim",
    "solve_theta",
]
