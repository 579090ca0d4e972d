"""Reusable numerical experiments: relaxation, steady states, sweeps, oracle checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import RelaxationAnalytics, low_field_coefficients, relaxation_analytics
from .field import coherent_amplitude
from .oracle import oracle_coefficients
from .params import PhysicalParams
from .sde.engine import EnsembleResult, IntegratorConfig, run_ensemble
from .stats import (
    EnsembleSummary,
    InitialCondition,
    SteadyStateEstimate,
    gaussianity,
    steady_state_width,
    summarize,
)

__all__ = [
    "OracleComparison",
    "RelaxationRun",
    "SteadyRun",
    "compare_with_oracle",
    "relaxation_run",
    "sample_low_field_configurations",
    "steady_run",
]


@dataclass
class RelaxationRun:
    result: EnsembleResult
    summary: EnsembleSummary
    analytics: RelaxationAnalytics


def relaxation_run(
    params: PhysicalParams,
    config: IntegratorConfig,
    n_traj: int,
    output_times,
    sampler: InitialCondition | None = None,
    workers: int = 1,
) -> RelaxationRun:
    """Width time series with the analytic exponential relaxation as overlay."""
    sampler = InitialCondition() if sampler is None else sampler
    result = run_ensemble(params, config, n_traj, output_times, sampler, workers=workers)
    analytics = relaxation_analytics(params)
    summary = summarize(result, params, analytics, initial_width=sampler.width(params))
    return RelaxationRun(result, summary, analytics)


@dataclass
class SteadyRun:
    """Stationary width estimate of one parameter point.

    ``estimate`` pools the window; ``snapshot`` is the Gaussianity report of
    the final output time alone, whose samples are (nearly) independent.
    """

    params: PhysicalParams
    analytics: RelaxationAnalytics
    estimate: SteadyStateEstimate
    snapshot: object
    result: EnsembleResult

    @property
    def analytic_width(self) -> float:
        return self.analytics.width_inf_spontaneous if self.result.config.spontaneous else self.analytics.width_inf

    @property
    def deviation(self) -> float:
        """(simulated - analytic) / stderr."""
        return (self.estimate.width - self.analytic_width) / self.estimate.stderr

    def row(self) -> dict:
        return {
            "delta_c": self.params.delta_c,
            "delta_c_over_kappa": self.params.delta_c / self.params.kappa,
            "dp_inf": self.estimate.width,
            "stderr": self.estimate.stderr,
            "dp_analytic": self.analytics.width_inf,
            "dp_analytic_spont": self.analytics.width_inf_spontaneous,
            "excess_kurtosis": self.snapshot.excess_kurtosis,
            "kurtosis_stderr": self.snapshot.kurtosis_stderr,
            "pump_rabi": self.params.atom.pump_rabi,
        }


def steady_run(
    params: PhysicalParams,
    config: IntegratorConfig,
    n_traj: int,
    rate_times: float = 8.0,
    fraction: float = 0.2,
    n_window: int = 41,
    sampler: InitialCondition | None = None,
    workers: int = 1,
) -> SteadyRun:
    """Run for ``rate_times / Gamma_cool`` and pool the last ``fraction`` of it."""
    analytics = relaxation_analytics(params)
    if not analytics.has_steady_state:
        raise ValueError("no stationary state for Delta_c >= 0")
    horizon = rate_times / analytics.cooling_rate
    times = np.concatenate([[0.0], np.linspace((1.0 - fraction) * horizon, horizon, n_window)])
    result = run_ensemble(params, config, n_traj, times, sampler, workers=workers)
    estimate = steady_state_width(result.momenta[:, 1:, :], result.times[1:], fraction=1.0)
    snapshot = gaussianity(result.momenta[:, -1, :])
    return SteadyRun(params, analytics, estimate, snapshot, result)


def sample_low_field_configurations(params: PhysicalParams, n_configs: int, rng, max_photons: float = 0.02,
                                    max_draws: int = 100000) -> np.ndarray:
    """Uniform random configurations whose adiabatic photon number is at most ``max_photons``."""
    out = []
    wavelength = 2.0 * math.pi / params.cavity.wavenumber
    draws = 0
    while len(out) < n_configs:
        x = rng.uniform(0.0, wavelength, params.n_atoms)
        draws += 1
        if abs(coherent_amplitude(x, params)) ** 2 <= max_photons:
            out.append(x)
        if draws > max_draws:
            raise RuntimeError("could not find enough low-field configurations")
    return np.array(out)


@dataclass
class OracleComparison:
    """Max-norm relative deviations between oracle and analytic coefficients.

    Each entry is ``max|oracle - analytic| / max|analytic|`` for one configuration.
    """

    positions: np.ndarray
    phi: np.ndarray
    friction: np.ndarray
    diffusion: np.ndarray
    cross: np.ndarray
    photon_number: np.ndarray

    @property
    def worst(self) -> dict:
        return {k: float(np.max(getattr(self, k))) for k in ("phi", "friction", "diffusion", "cross")}

    @property
    def median(self) -> dict:
        return {k: float(np.median(getattr(self, k))) for k in ("phi", "friction", "diffusion", "cross")}

    def rows(self):
        for i in range(len(self.phi)):
            yield {
                "index": i,
                "photon_number": float(self.photon_number[i]),
                "phi": float(self.phi[i]),
                "friction": float(self.friction[i]),
                "diffusion": float(self.diffusion[i]),
                "cross": float(self.cross[i]),
            }


def _rel(a, b):
    scale = np.max(np.abs(b))
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else float(np.max(np.abs(a)))


def compare_with_oracle(positions, params: PhysicalParams, n_max: int = 2, spontaneous: bool = True) -> OracleComparison:
    x = np.atleast_2d(np.asarray(positions, dtype=float))
    res = {k: [] for k in ("phi", "friction", "diffusion", "cross", "photon_number")}
    for xi in x:
        orc = oracle_coefficients(xi, params, n_max=n_max, spontaneous=spontaneous)
        ana = low_field_coefficients(xi, params, spontaneous=spontaneous)
        res["phi"].append(_rel(orc.phi, ana.drift_force))
        res["friction"].append(_rel(orc.friction, ana.friction_matrix))
        res["diffusion"].append(_rel(orc.diffusion, ana.diffusion_matrix))
        res["cross"].append(_rel(orc.cross, ana.cross_matrix))
        res["photon_number"].append(orc.photon_number)
    return OracleComparison(positions=x, **{k: np.array(v) for k, v in res.items()})
