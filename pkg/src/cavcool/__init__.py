"""Semiclassical cavity cooling of laser-driven atoms.

Analytic Fokker-Planck coefficients, a truncated-Fock coefficient oracle and
stochastic integrators for the cavity-eliminated and semiclassical-field
models.  All quantities are in internal units: frequencies in gamma/2,
momenta in hbar k, positions in 1/k and time in 2/gamma.
"""

__version__ = "0.1.0"

from .coefficients import (
    LowFieldCoefficients,
    RelaxationAnalytics,
    cross_matrix,
    diffusion_matrix,
    drift_force,
    friction_matrix,
    friction_term,
    low_field_coefficients,
    relaxation_analytics,
    width_evolution,
)
from .field import (
    FieldSnapshot,
    coherent_amplitude,
    effective_detuning,
    effective_kappa,
    field_snapshot,
    mean_photon_number_uniform,
    threshold_pump,
)
from .oracle import build_liouvillian, coefficient_integrals, oracle_coefficients, steady_state
from .params import (
    AtomSpec,
    CavitySpec,
    DerivedCouplings,
    PhysicalParams,
    UnitSystem,
    derive_couplings,
    paper_params,
    rubidium85_units,
    validate_regime,
)
from .sde import (
    EnsembleResult,
    IntegratorConfig,
    factorize_diffusion,
    run_ensemble,
    step_model_A,
    step_model_B,
)
from .stats import InitialCondition, gaussianity, pooled_width, sample_initial, steady_state_width
from .estimator import CoolingSimulator

__all__ = [
    "AtomSpec",
    "CavitySpec",
    "CoolingSimulator",
    "DerivedCouplings",
    "EnsembleResult",
    "FieldSnapshot",
    "InitialCondition",
    "IntegratorConfig",
    "LowFieldCoefficients",
    "PhysicalParams",
    "RelaxationAnalytics",
    "UnitSystem",
    "build_liouvillian",
    "coefficient_integrals",
    "coherent_amplitude",
    "cross_matrix",
    "derive_couplings",
    "diffusion_matrix",
    "drift_force",
    "effective_detuning",
    "effective_kappa",
    "factorize_diffusion",
    "field_snapshot",
    "friction_matrix",
    "friction_term",
    "gaussianity",
    "low_field_coefficients",
    "mean_photon_number_uniform",
    "oracle_coefficients",
    "paper_params",
    "pooled_width",
    "relaxation_analytics",
    "rubidium85_units",
    "run_ensemble",
    "sample_initial",
    "steady_state",
    "steady_state_width",
    "step_model_A",
    "step_model_B",
    "threshold_pump",
    "validate_regime",
    "width_evolution",
]
