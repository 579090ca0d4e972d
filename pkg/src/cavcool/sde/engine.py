"""Euler-Maruyama integration of the two stochastic atom-cavity models.

Momenta and field quadratures take an Euler-Maruyama step; positions are then
advanced with the updated momenta.  This partitioned (symplectic) Euler step
has the same weak order as plain Euler-Maruyama but does not heat the
conservative motion secularly, which matters because cooling is slow compared
with the motional frequencies.

Model ``"A"``: cavity adiabatically eliminated, state ``(x, p)``; the
momentum noise is rank one along ``sin(k x_j)`` plus an optional spontaneous
emission diagonal.

Model ``"B"``: semiclassical cavity field, state ``(x, p, alpha_r, alpha_i)``
with (N+2)-dimensional correlated noise.

Each trajectory owns three random streams derived from ``(seed, index)``:
initial condition, cavity noise and spontaneous-emission noise.  Results are
therefore independent of how trajectories are distributed over workers, and
runs that differ only in the spontaneous flag share their cavity noise.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from ..coefficients import relaxation_analytics
from ..params import PhysicalParams
from .noise import arrow_factor, eigen_factor

__all__ = [
    "EnsembleResult",
    "IntegratorConfig",
    "NumericalFailure",
    "TrajectoryStateA",
    "TrajectoryStateB",
    "default_dt",
    "run_ensemble",
    "step_model_A",
    "step_model_B",
    "trajectory_streams",
]

MAX_ABORT_FRACTION = 1e-3
CLIP_WARN_FRACTION = 1e-8


class NumericalFailure(RuntimeError):
    """Raised when too many trajectories become non-finite."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``dt=None`` selects :func:`default_dt`.  ``frozen_detuning`` replaces the
    instantaneous Delta_c' by Delta_c - N U / 2 (model A only).
    ``field_init`` is ``"deterministic"`` or ``"coherent"``; the latter draws
    each quadrature with variance 1/4 around ``field_amplitude``.
    ``coarsen`` > 1 builds each Wiener increment from that many consecutive
    normals, so a run with ``dt`` and ``coarsen=2`` follows the same Brownian
    path as a run with ``dt/2`` and the same seed.
    """

    model: str = "A"
    dt: float | None = None
    seed: int = 0
    spontaneous: bool = False
    cross_noise: bool = False
    frozen_detuning: bool = False
    field_init: str = "deterministic"
    field_amplitude: tuple = (5.0, 0.0)
    coarsen: int = 1

    def __post_init__(self):
        if self.coarsen < 1:
            raise ValueError("coarsen must be >= 1")
        if self.model not in ("A", "B"):
            raise ValueError("model must be 'A' or 'B'")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.field_init not in ("deterministic", "coherent"):
            raise ValueError("field_init must be 'deterministic' or 'coherent'")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["field_amplitude"] = list(self.field_amplitude)
        return d


def default_dt(params: PhysicalParams, model: str = "A", initial_width: float | None = None) -> float:
    """Default step size.

    Model A: ``1e-3 / Gamma_cool``, capped so that an atom with the initial
    momentum width advances at most 0.05 rad of the standing wave per step.
    Model B: ``1e-2 min(1/kappa', 1/|Delta_c'|)`` at the uniform-gas values.
    """
    k = params.cavity.wavenumber
    width = math.sqrt(params.mass) if initial_width is None else initial_width
    phase_cap = 0.05 * params.mass / (k * width) if width > 0 else math.inf
    if model == "A":
        rate = relaxation_analytics(params).cooling_rate
        dt = 1e-3 / rate if rate > 0 else math.inf
        dt = min(dt, phase_cap)
    else:
        cp = params.couplings
        kappa_eff = params.kappa + 0.5 * params.n_atoms * cp.Gamma
        delta_eff = abs(params.delta_c - 0.5 * params.n_atoms * cp.U)
        dt = 1e-2 * min(1.0 / kappa_eff, 1.0 / delta_eff if delta_eff > 0 else math.inf)
        dt = min(dt, phase_cap)
    if not math.isfinite(dt):
        dt = 1.0
    return dt


def _coef_a(params: PhysicalParams) -> np.ndarray:
    cp = params.couplings
    k = params.cavity.wavenumber
    d_sp = k * k * cp.Gamma * cp.s**2 * params.atom.dipole_second_moment
    frozen = params.delta_c - 0.5 * params.n_atoms * cp.U
    return np.array([params.mass, cp.S**2, params.kappa, params.delta_c, cp.U, cp.omega_r, d_sp, frozen, k])


def _coef_b(params: PhysicalParams, spontaneous: bool) -> np.ndarray:
    cp = params.couplings
    k = params.cavity.wavenumber
    Gamma = cp.Gamma if spontaneous else 0.0
    return np.array(
        [params.mass, k, cp.U, cp.s * cp.U, cp.s, Gamma, params.atom.dipole_second_moment, params.kappa, params.delta_c]
    )


@njit(cache=True)
def _step_a(x, p, w0, wsp, dt, coef, spont, cross, frozen):
    m, S2, kappa, delta_c, U, omega_r, d_sp, frozen_delta, k = (
        coef[0], coef[1], coef[2], coef[3], coef[4], coef[5], coef[6], coef[7], coef[8]
    )
    n = x.shape[0]
    s = np.empty(n)
    csum = 0.0
    c2 = 0.0
    sp = 0.0
    for j in range(n):
        s[j] = math.sin(k * x[j])
        cj = math.cos(k * x[j])
        csum += cj
        c2 += cj * cj
        sp += s[j] * p[j]
    d = frozen_delta if frozen else delta_c - U * c2
    den = d * d + kappa * kappa
    f_drift = 2.0 * k * S2 * d / den
    f_fric = 8.0 * omega_r * S2 * d * kappa / (den * den)
    cdiff = k * k * S2 * kappa / den
    sdt = math.sqrt(dt)
    shared = math.sqrt(2.0 * cdiff) * sdt * w0
    xshared = 0.0
    if cross and cdiff > 0.0:
        eta = 2.0 * omega_r * S2 * (kappa * kappa - d * d) / (den * den)
        xshared = eta / math.sqrt(2.0 * cdiff) * sdt * w0
    spamp = math.sqrt(2.0 * d_sp) * sdt
    for j in range(n):
        dp = (f_drift * s[j] * csum + f_fric * s[j] * sp) * dt + shared * s[j]
        if spont:
            dp += spamp * wsp[j]
        p[j] += dp
        x[j] += p[j] / m * dt + xshared * s[j]


@njit(cache=True)
def _field_model_noise_terms(x, ar, ai, coef, kp):
    m, k, U, S, s_ratio, Gamma, u2 = coef[0], coef[1], coef[2], coef[3], coef[4], coef[5], coef[6]
    n = x.shape[0]
    b = np.empty(n)
    c = np.empty(n)
    a2 = ar * ar + ai * ai
    for j in range(n):
        sj = math.sin(k * x[j])
        cj = math.cos(k * x[j])
        b[j] = -0.5 * k * Gamma * math.sin(2.0 * k * x[j])
        c[j] = 2.0 * k * k * Gamma * (a2 * (sj * sj + u2 * cj * cj) + s_ratio * u2 * (2.0 * ar * cj + s_ratio))
    return 0.5 * kp, b, c


@njit(cache=True)
def _step_b(x, p, fld, w, dt, coef, stats, bbuf, dbuf):
    """One Euler-Maruyama step of the semiclassical-field model.

    ``w`` holds N+2 standard normals (two field, N atomic).  ``stats``
    accumulates [fallback count, clipped mass, trace at fallback].
    """
    m, k, U, S, s_ratio, Gamma, u2, kappa, delta_c = (
        coef[0], coef[1], coef[2], coef[3], coef[4], coef[5], coef[6], coef[7], coef[8]
    )
    n = x.shape[0]
    ar = fld[0]
    ai = fld[1]
    a2 = ar * ar + ai * ai
    csum = 0.0
    c2 = 0.0
    force = np.empty(n)
    for j in range(n):
        sj = math.sin(k * x[j])
        cj = math.cos(k * x[j])
        csum += cj
        c2 += cj * cj
        force[j] = k * (U * a2 * math.sin(2.0 * k * x[j]) + 2.0 * S * ar * sj - 2.0 * ai * Gamma * s_ratio * sj)
    d = delta_c - U * c2
    kp = kappa + Gamma * c2
    dar = (-d * ai - kp * ar - Gamma * s_ratio * csum) * dt
    dai = (d * ar - kp * ai - S * csum) * dt
    sdt = math.sqrt(dt)
    if Gamma == 0.0:
        amp = math.sqrt(0.5 * kp) * sdt
        dar += amp * w[0]
        dai += amp * w[1]
        for j in range(n):
            p[j] += force[j] * dt
            x[j] += p[j] / m * dt
    else:
        a, b, c = _field_model_noise_terms(x, ar, ai, coef, kp)
        ok = arrow_factor(a, b, ar, ai, c, bbuf)
        if not ok:
            dbuf[:, :] = 0.0
            dbuf[0, 0] = a
            dbuf[1, 1] = a
            tr = 2.0 * a
            for j in range(n):
                dbuf[0, 2 + j] = -b[j] * ai
                dbuf[2 + j, 0] = -b[j] * ai
                dbuf[1, 2 + j] = b[j] * ar
                dbuf[2 + j, 1] = b[j] * ar
                dbuf[2 + j, 2 + j] = c[j]
                tr += c[j]
            stats[0] += 1.0
            stats[1] += eigen_factor(dbuf, bbuf)
            stats[2] += tr
        nz = n + 2
        for i in range(nz):
            acc = 0.0
            for l in range(nz):
                acc += bbuf[i, l] * w[l]
            acc *= sdt
            if i == 0:
                dar += acc
            elif i == 1:
                dai += acc
            else:
                j = i - 2
                p[j] += force[j] * dt + acc
                x[j] += p[j] / m * dt
    fld[0] = ar + dar
    fld[1] = ai + dai


@njit(cache=True)
def _finite(x, p):
    for j in range(x.shape[0]):
        if not (math.isfinite(x[j]) and math.isfinite(p[j])):
            return False
    return True


@njit(cache=True)
def _run_a(x, p, rng_cav, rng_sp, n_steps, dt, coef, spont, cross, frozen, record_steps, xs, ps, coarsen):
    n = x.shape[0]
    wsp = np.zeros(n)
    norm = 1.0 / math.sqrt(coarsen)
    r = 0
    if record_steps.shape[0] > 0 and record_steps[0] == 0:
        xs[0, :] = x
        ps[0, :] = p
        r = 1
    for step in range(1, n_steps + 1):
        w0 = 0.0
        for j in range(n):
            wsp[j] = 0.0
        for _ in range(coarsen):
            w0 += rng_cav.standard_normal()
            if spont:
                for j in range(n):
                    wsp[j] += rng_sp.standard_normal()
        w0 *= norm
        for j in range(n):
            wsp[j] *= norm
        _step_a(x, p, w0, wsp, dt, coef, spont, cross, frozen)
        if not _finite(x, p):
            return step
        while r < record_steps.shape[0] and record_steps[r] == step:
            xs[r, :] = x
            ps[r, :] = p
            r += 1
    return 0


@njit(cache=True)
def _run_b(x, p, fld, rng_cav, rng_sp, n_steps, dt, coef, record_steps, xs, ps, fs, stats, coarsen):
    n = x.shape[0]
    norm = 1.0 / math.sqrt(coarsen)
    w = np.zeros(n + 2)
    bbuf = np.zeros((n + 2, n + 2))
    dbuf = np.zeros((n + 2, n + 2))
    spont = coef[5] != 0.0
    r = 0
    if record_steps.shape[0] > 0 and record_steps[0] == 0:
        xs[0, :] = x
        ps[0, :] = p
        fs[0, :] = fld
        r = 1
    for step in range(1, n_steps + 1):
        for i in range(n + 2):
            w[i] = 0.0
        for _ in range(coarsen):
            w[0] += rng_cav.standard_normal()
            w[1] += rng_cav.standard_normal()
            if spont:
                for j in range(n):
                    w[2 + j] += rng_sp.standard_normal()
        for i in range(n + 2):
            w[i] *= norm
        _step_b(x, p, fld, w, dt, coef, stats, bbuf, dbuf)
        if not (_finite(x, p) and math.isfinite(fld[0]) and math.isfinite(fld[1])):
            return step
        while r < record_steps.shape[0] and record_steps[r] == step:
            xs[r, :] = x
            ps[r, :] = p
            fs[r, :] = fld
            r += 1
    return 0


@dataclass
class TrajectoryStateA:
    x: np.ndarray
    p: np.ndarray
    t: float = 0.0


@dataclass
class TrajectoryStateB:
    x: np.ndarray
    p: np.ndarray
    alpha_r: float
    alpha_i: float
    t: float = 0.0


def step_model_A(state: TrajectoryStateA, params: PhysicalParams, config: IntegratorConfig, rng, dt=None):
    """Advance a model-A state by one Euler-Maruyama step; returns a new state."""
    dt = config.dt if dt is None else dt
    if dt is None:
        dt = default_dt(params, "A")
    x = np.array(state.x, dtype=float)
    p = np.array(state.p, dtype=float)
    w0 = rng.standard_normal()
    wsp = rng.standard_normal(x.size) if config.spontaneous else np.zeros(x.size)
    _step_a(x, p, w0, wsp, dt, _coef_a(params), config.spontaneous, config.cross_noise, config.frozen_detuning)
    if not _finite(x, p):
        raise NumericalFailure("non-finite state after model-A step")
    return TrajectoryStateA(x, p, state.t + dt)


def step_model_B(state: TrajectoryStateB, params: PhysicalParams, config: IntegratorConfig, rng, dt=None, stats=None):
    dt = config.dt if dt is None else dt
    if dt is None:
        dt = default_dt(params, "B")
    x = np.array(state.x, dtype=float)
    p = np.array(state.p, dtype=float)
    n = x.size
    fld = np.array([state.alpha_r, state.alpha_i], dtype=float)
    w = np.zeros(n + 2)
    w[:2] = rng.standard_normal(2)
    if config.spontaneous:
        w[2:] = rng.standard_normal(n)
    stats = np.zeros(3) if stats is None else stats
    _step_b(x, p, fld, w, dt, _coef_b(params, config.spontaneous), stats, np.zeros((n + 2, n + 2)), np.zeros((n + 2, n + 2)))
    if not (_finite(x, p) and np.all(np.isfinite(fld))):
        raise NumericalFailure("non-finite state after model-B step")
    return TrajectoryStateB(x, p, float(fld[0]), float(fld[1]), state.t + dt)


def trajectory_streams(seed: int, index: int):
    """Independent generators (initial, cavity noise, spontaneous noise) for one trajectory."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return [np.random.Generator(np.random.PCG64(c)) for c in ss.spawn(3)]


@dataclass
class EnsembleResult:
    """Recorded trajectory data.

    Arrays are indexed ``[trajectory, output_time, atom]``; aborted
    trajectories are kept as NaN rows and flagged in ``aborted``.
    """

    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray
    fields: np.ndarray | None
    aborted: np.ndarray
    dt: float
    n_steps: int
    config: IntegratorConfig
    seed: int
    clip_events: int = 0
    clipped_mass: float = 0.0
    clip_trace: float = 0.0
    indices: np.ndarray = field(default=None)

    @property
    def n_traj(self) -> int:
        return self.momenta.shape[0]

    @property
    def abort_count(self) -> int:
        return int(np.sum(self.aborted))

    def valid(self):
        return ~self.aborted

    def report(self) -> dict:
        return {
            "n_traj": self.n_traj,
            "aborted": self.abort_count,
            "abort_fraction": self.abort_count / max(self.n_traj, 1),
            "clip_events": int(self.clip_events),
            "clipped_mass": float(self.clipped_mass),
            "clipped_fraction": float(self.clipped_mass / self.clip_trace) if self.clip_trace > 0 else 0.0,
            "dt": self.dt,
            "n_steps": self.n_steps,
        }


def _initial_state(params, config, sampler, rng_init, row=None):
    if row is None:
        x, p = sampler.sample(params, rng_init)
    else:
        x, p = row[: params.n_atoms], row[params.n_atoms :]
    fld = np.array(config.field_amplitude, dtype=float)
    if config.model == "B" and config.field_init == "coherent":
        fld = fld + 0.5 * rng_init.standard_normal(2)
    return np.array(x, dtype=float), np.array(p, dtype=float), fld


def _run_block(params, config, sampler, indices, record_steps, n_steps, dt, states=None):
    n = params.n_atoms
    n_out = record_steps.size
    xs = np.full((len(indices), n_out, n), np.nan)
    ps = np.full((len(indices), n_out, n), np.nan)
    fs = np.full((len(indices), n_out, 2), np.nan) if config.model == "B" else None
    aborted = np.zeros(len(indices), dtype=bool)
    stats = np.zeros(3)
    coef = _coef_a(params) if config.model == "A" else _coef_b(params, config.spontaneous)
    for row, idx in enumerate(indices):
        rng_init, rng_cav, rng_sp = trajectory_streams(config.seed, int(idx))
        x, p, fld = _initial_state(params, config, sampler, rng_init, None if states is None else states[row])
        bx = np.full((n_out, n), np.nan)
        bp = np.full((n_out, n), np.nan)
        if config.model == "A":
            status = _run_a(
                x, p, rng_cav, rng_sp, n_steps, dt, coef,
                config.spontaneous, config.cross_noise, config.frozen_detuning, record_steps, bx, bp, config.coarsen,
            )
        else:
            bf = np.full((n_out, 2), np.nan)
            status = _run_b(x, p, fld, rng_cav, rng_sp, n_steps, dt, coef, record_steps, bx, bp, bf, stats, config.coarsen)
        if status:
            aborted[row] = True
            continue
        xs[row] = bx
        ps[row] = bp
        if fs is not None:
            fs[row] = bf
    return xs, ps, fs, aborted, stats


def run_ensemble(
    params: PhysicalParams,
    config: IntegratorConfig,
    n_traj: int,
    output_times,
    initial_sampler=None,
    workers: int = 1,
    first_index: int = 0,
    check_aborts: bool = True,
    initial_states=None,
) -> EnsembleResult:
    """Integrate ``n_traj`` independent trajectories and record them at ``output_times``.

    Output times are rounded to the step grid.  The result depends only on
    ``(config, params, sampler, trajectory indices)``, never on ``workers``.
    ``initial_states`` of shape ``(n_traj, 2 N)`` holding ``[x, p]`` replaces
    the sampler.
    """
    from ..stats import InitialCondition

    sampler = InitialCondition() if initial_sampler is None else initial_sampler
    dt = config.dt if config.dt is not None else default_dt(params, config.model, sampler.width(params))
    times = np.asarray(output_times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times < 0):
        raise ValueError("output_times must be a non-empty 1-d array of non-negative times")
    record_steps = np.unique(np.rint(times / dt).astype(np.int64))
    n_steps = int(record_steps[-1])
    indices = np.arange(first_index, first_index + n_traj)
    if initial_states is not None:
        initial_states = np.asarray(initial_states, dtype=float)
        if initial_states.shape != (n_traj, 2 * params.n_atoms):
            raise ValueError(f"initial_states must have shape ({n_traj}, {2 * params.n_atoms})")

    if workers <= 1 or n_traj < 2:
        blocks = [_run_block(params, config, sampler, indices, record_steps, n_steps, dt, initial_states)]
    else:
        rows = np.array_split(np.arange(n_traj), min(workers, n_traj))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _run_block, params, config, sampler, indices[r], record_steps, n_steps, dt,
                    None if initial_states is None else initial_states[r],
                )
                for r in rows
            ]
            blocks = [f.result() for f in futures]

    xs = np.concatenate([b[0] for b in blocks])
    ps = np.concatenate([b[1] for b in blocks])
    fs = np.concatenate([b[2] for b in blocks]) if config.model == "B" else None
    aborted = np.concatenate([b[3] for b in blocks])
    stats = np.sum([b[4] for b in blocks], axis=0)
    result = EnsembleResult(
        times=record_steps * dt,
        positions=xs,
        momenta=ps,
        fields=fs,
        aborted=aborted,
        dt=dt,
        n_steps=n_steps,
        config=config,
        seed=config.seed,
        clip_events=int(stats[0]),
        clipped_mass=float(stats[1]),
        clip_trace=float(stats[2]),
        indices=indices,
    )
    if check_aborts and result.abort_count > MAX_ABORT_FRACTION * n_traj:
        raise NumericalFailure(
            f"{result.abort_count} of {n_traj} trajectories aborted (limit {MAX_ABORT_FRACTION:.1%})", result
        )
    return result
