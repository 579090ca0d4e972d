"""Low-field Fokker-Planck coefficients and relaxation analytics.

Valid when the cavity is close to the vacuum (sqrt(N) S << kappa) and the
cavity field follows the atoms adiabatically.  Position arrays have shape
``(..., N)``; matrices come back with shape ``(..., N, N)``.

Sign convention for friction: the momentum drift is
``Phi - friction_matrix @ p``, so a positive friction matrix damps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import PhysicalParams

__all__ = [
    "LowFieldCoefficients",
    "RelaxationAnalytics",
    "cross_matrix",
    "diffusion_matrix",
    "drift_force",
    "friction_matrix",
    "friction_term",
    "low_field_coefficients",
    "relaxation_analytics",
    "spontaneous_diffusion",
    "width_evolution",
]


def _trig(positions, params):
    kx = params.cavity.wavenumber * np.asarray(positions, dtype=float)
    return np.sin(kx), np.cos(kx)


def _detuning(cos, params, frozen_detuning):
    if frozen_detuning:
        return np.full(cos.shape[:-1], params.delta_c - 0.5 * params.n_atoms * params.couplings.U)
    return params.delta_c - params.couplings.U * np.sum(cos * cos, axis=-1)


def drift_force(positions, params: PhysicalParams, frozen_detuning: bool = False):
    """Mean cavity force 2 hbar k S^2 Delta_c'/(Delta_c'^2 + kappa^2) sin(k x_n) sum_l cos(k x_l)."""
    sin, cos = _trig(positions, params)
    d = _detuning(cos, params, frozen_detuning)
    k, S2, kappa = params.cavity.wavenumber, params.couplings.S**2, params.kappa
    pref = 2.0 * k * S2 * d / (d * d + kappa**2)
    return pref[..., None] * sin * np.sum(cos, axis=-1, keepdims=True)


def friction_matrix(positions, params: PhysicalParams, frozen_detuning: bool = False):
    sin, cos = _trig(positions, params)
    d = _detuning(cos, params, frozen_detuning)
    cp, kappa = params.couplings, params.kappa
    pref = -8.0 * cp.omega_r * cp.S**2 * d * kappa / (d * d + kappa**2) ** 2
    return pref[..., None, None] * sin[..., :, None] * sin[..., None, :]


def friction_term(positions, momenta, params: PhysicalParams, frozen_detuning: bool = False):
    """Velocity-dependent part of the momentum drift, ``-friction_matrix @ p``."""
    sin, cos = _trig(positions, params)
    d = _detuning(cos, params, frozen_detuning)
    cp, kappa = params.couplings, params.kappa
    pref = 8.0 * cp.omega_r * cp.S**2 * d * kappa / (d * d + kappa**2) ** 2
    proj = np.sum(sin * np.asarray(momenta, dtype=float), axis=-1, keepdims=True)
    return pref[..., None] * sin * proj


def spontaneous_diffusion(params: PhysicalParams) -> float:
    """Per-atom momentum diffusion from spontaneous emission, (hbar k)^2 (gamma'/2) s^2 u2."""
    cp = params.couplings
    k = params.cavity.wavenumber
    return k * k * cp.Gamma * cp.s**2 * params.atom.dipole_second_moment


def diffusion_matrix(positions, params: PhysicalParams, spontaneous: bool = False, frozen_detuning: bool = False):
    sin, cos = _trig(positions, params)
    d = _detuning(cos, params, frozen_detuning)
    k, kappa = params.cavity.wavenumber, params.kappa
    pref = k * k * params.couplings.S**2 * kappa / (d * d + kappa**2)
    D = pref[..., None, None] * sin[..., :, None] * sin[..., None, :]
    if spontaneous:
        D = D + spontaneous_diffusion(params) * np.eye(sin.shape[-1])
    return D


def cross_matrix(positions, params: PhysicalParams, frozen_detuning: bool = False):
    """Position-momentum cross-diffusion eta_{jl}."""
    sin, cos = _trig(positions, params)
    d = _detuning(cos, params, frozen_detuning)
    cp, kappa = params.couplings, params.kappa
    pref = 2.0 * cp.omega_r * cp.S**2 * (kappa**2 - d * d) / (d * d + kappa**2) ** 2
    return pref[..., None, None] * sin[..., :, None] * sin[..., None, :]


@dataclass(frozen=True)
class LowFieldCoefficients:
    drift_force: np.ndarray
    friction_matrix: np.ndarray
    diffusion_matrix: np.ndarray
    cross_matrix: np.ndarray


def low_field_coefficients(
    positions, params: PhysicalParams, spontaneous: bool = False, frozen_detuning: bool = False
) -> LowFieldCoefficients:
    return LowFieldCoefficients(
        drift_force=drift_force(positions, params, frozen_detuning),
        friction_matrix=friction_matrix(positions, params, frozen_detuning),
        diffusion_matrix=diffusion_matrix(positions, params, spontaneous, frozen_detuning),
        cross_matrix=cross_matrix(positions, params, frozen_detuning),
    )


@dataclass(frozen=True)
class RelaxationAnalytics:
    """Closed-form momentum relaxation of a spatially uniform gas.

    ``A`` is the momentum drift rate and ``B`` the diffusion constant of the
    single-atom Fokker-Planck equation.  Steady-state quantities are NaN when
    ``A >= 0`` (no stationary solution).
    """

    A: float
    B: float
    delta1: float
    delta2: float
    mass: float
    spontaneous_factor: float

    @property
    def has_steady_state(self) -> bool:
        return self.A < 0

    @property
    def width_inf(self) -> float:
        return math.sqrt(-self.B / self.A) if self.A < 0 else math.nan

    @property
    def temperature(self) -> float:
        """k_B T in energy units."""
        return self.width_inf**2 / self.mass

    @property
    def cooling_rate(self) -> float:
        return -2.0 * self.A

    @property
    def width_inf_spontaneous(self) -> float:
        return self.width_inf * math.sqrt(self.spontaneous_factor)

    def as_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "width_inf": self.width_inf,
            "temperature": self.temperature,
            "cooling_rate": self.cooling_rate,
            "width_inf_spontaneous": self.width_inf_spontaneous,
        }


def relaxation_analytics(params: PhysicalParams, n_atoms: int | None = None) -> RelaxationAnalytics:
    n = params.n_atoms if n_atoms is None else n_atoms
    cp = params.couplings
    kappa, dc = params.kappa, params.delta_c
    k = params.cavity.wavenumber
    lor = dc * dc + kappa * kappa
    shift = 0.5 * n * cp.U / dc * (2 * n - 1) / (2 * n) if dc != 0 else 0.0
    delta1 = 1.0 + (3 * dc * dc - kappa * kappa) / lor * shift
    delta2 = 1.0 + 2 * dc * dc / lor * shift
    A = 4.0 * cp.omega_r * cp.S**2 * dc * kappa * delta1 / lor**2
    B = 0.5 * k * k * cp.S**2 * kappa * delta2 / lor
    da = params.atom.detuning
    gamma = params.atom.linewidth
    spont = 1.0 + 2.0 * params.atom.dipole_second_moment * (da * da + 0.25 * gamma * gamma) / (da * da) * lor / (
        kappa * kappa * cp.cooperativity * delta2
    )
    return RelaxationAnalytics(A=A, B=B, delta1=delta1, delta2=delta2, mass=params.mass, spontaneous_factor=spont)


def width_evolution(width0, t, analytics: RelaxationAnalytics):
    """Momentum width Delta p(t) relaxing exponentially towards the stationary width."""
    e = np.exp(2.0 * analytics.A * np.asarray(t, dtype=float))
    return np.sqrt(np.square(width0) * e + (1.0 - e) * analytics.width_inf**2)
