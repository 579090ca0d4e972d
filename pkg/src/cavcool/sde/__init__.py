"""Stochastic integration of the cavity-eliminated and semiclassical-field models."""

from .engine import (
    EnsembleResult,
    IntegratorConfig,
    NumericalFailure,
    TrajectoryStateA,
    TrajectoryStateB,
    default_dt,
    run_ensemble,
    step_model_A,
    step_model_B,
    trajectory_streams,
)
from .noise import DiffusionFactorization, factorize_diffusion, field_model_diffusion

__all__ = [
    "DiffusionFactorization",
    "EnsembleResult",
    "IntegratorConfig",
    "NumericalFailure",
    "TrajectoryStateA",
    "TrajectoryStateB",
    "default_dt",
    "factorize_diffusion",
    "field_model_diffusion",
    "run_ensemble",
    "step_model_A",
    "step_model_B",
    "trajectory_streams",
]
