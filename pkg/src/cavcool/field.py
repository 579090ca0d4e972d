"""Adiabatic cavity field for atoms frozen at given positions.

All functions accept positions of shape ``(..., N)`` and broadcast over the
leading axes, so a batch of configurations can be evaluated in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import PhysicalParams

__all__ = [
    "FieldSnapshot",
    "coherent_amplitude",
    "effective_detuning",
    "effective_kappa",
    "field_snapshot",
    "mean_photon_number_uniform",
    "threshold_pump",
]


def _cos(positions, params):
    return np.cos(params.cavity.wavenumber * np.asarray(positions, dtype=float))


def effective_detuning(positions, params: PhysicalParams):
    """Delta_c' = Delta_c - U sum_j cos^2(k x_j)."""
    c = _cos(positions, params)
    return params.delta_c - params.couplings.U * np.sum(c * c, axis=-1)


def effective_kappa(positions, params: PhysicalParams, spontaneous: bool = True):
    """Field decay rate including photon loss by spontaneous scattering.

    With ``spontaneous=False`` this is exactly kappa.
    """
    if not spontaneous:
        return np.full(np.shape(positions)[:-1], params.kappa)[()]
    c = _cos(positions, params)
    return params.kappa + params.couplings.Gamma * np.sum(c * c, axis=-1)


def coherent_amplitude(positions, params: PhysicalParams, spontaneous: bool = True):
    c = _cos(positions, params)
    cp = params.couplings
    drive = cp.S * np.sum(c, axis=-1)
    if spontaneous:
        drive = drive * (1.0 - 0.5j * params.atom.linewidth / params.atom.detuning)
    return drive / (effective_detuning(positions, params) + 1j * effective_kappa(positions, params, spontaneous))


@dataclass(frozen=True)
class FieldSnapshot:
    alpha: complex
    kappa_eff: float
    delta_eff: float

    @property
    def n_photons(self) -> float:
        return abs(self.alpha) ** 2


def field_snapshot(positions, params: PhysicalParams, spontaneous: bool = True) -> FieldSnapshot:
    x = np.asarray(positions, dtype=float)
    if x.ndim != 1:
        raise ValueError("field_snapshot expects a single configuration of shape (N,)")
    return FieldSnapshot(
        alpha=complex(coherent_amplitude(x, params, spontaneous)),
        kappa_eff=float(effective_kappa(x, params, spontaneous)),
        delta_eff=float(effective_detuning(x, params)),
    )


def mean_photon_number_uniform(
    params: PhysicalParams, n_atoms: int | None = None, form: str = "coupling"
) -> float:
    """Intracavity photon number for a spatially uniform gas.

    ``form="coupling"`` gives (N S^2 / 2) / (Delta_c^2 + kappa^2);
    ``form="threshold"`` the equivalent (Omega/Omega_c)^2 (Delta_c^2 + kappa^2) / (8 Delta_c^2),
    which holds for N |U| << |Delta_c|.
    """
    n = params.n_atoms if n_atoms is None else n_atoms
    kappa, delta_c = params.kappa, params.delta_c
    if form == "coupling":
        return 0.5 * n * params.couplings.S**2 / (delta_c**2 + kappa**2)
    if form == "threshold":
        ratio = params.atom.pump_rabi / threshold_pump(params, n)
        return ratio**2 * (delta_c**2 + kappa**2) / (8.0 * delta_c**2)
    raise ValueError(f"unknown form {form!r}")


def threshold_pump(params: PhysicalParams, n_atoms: int | None = None) -> float:
    """Self-organization threshold |Omega_c| with delta = Delta_c - N U / 2."""
    n = params.n_atoms if n_atoms is None else n_atoms
    delta = params.delta_c - 0.5 * n * params.couplings.U
    if delta == 0:
        raise ValueError("threshold diverges for Delta_c = N U / 2")
    kappa = params.kappa
    return (kappa**2 + delta**2) / (2.0 * abs(delta) * math.sqrt(n)) * abs(params.atom.detuning) / params.atom.vacuum_rabi
