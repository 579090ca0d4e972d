"""Initial conditions, momentum-width estimators and distribution diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .coefficients import RelaxationAnalytics, width_evolution
from .params import PhysicalParams

__all__ = [
    "EnsembleSummary",
    "GaussianityReport",
    "Histogram",
    "InitialCondition",
    "MomentAccumulator",
    "SteadyStateEstimate",
    "WidthEstimate",
    "gaussianity",
    "momentum_histogram",
    "pooled_width",
    "sample_initial",
    "spatial_order_diagnostic",
    "steady_state_width",
    "summarize",
    "write_csv",
    "write_histogram_csv",
    "write_sweep_csv",
    "write_width_csv",
]


@dataclass(frozen=True)
class InitialCondition:
    """Uniform positions over one wavelength and Maxwell-Boltzmann momenta.

    ``temperature`` is k_B T_in in energy units (hbar gamma/2), so the
    default of 1 is the Doppler-limit initial state.
    """

    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")

    def width(self, params: PhysicalParams) -> float:
        return math.sqrt(params.mass * self.temperature)

    def sample(self, params: PhysicalParams, rng, n_atoms: int | None = None):
        n = params.n_atoms if n_atoms is None else n_atoms
        wavelength = 2.0 * math.pi / params.cavity.wavenumber
        x = rng.uniform(0.0, wavelength, n)
        p = self.width(params) * rng.standard_normal(n)
        return x, p


def sample_initial(params: PhysicalParams, n_atoms: int | None = None, temperature: float = 1.0, rng=None):
    """Draw one trajectory's initial ``(x, p)``."""
    from .sde.engine import TrajectoryStateA

    rng = np.random.default_rng() if rng is None else rng
    x, p = InitialCondition(temperature).sample(params, rng, n_atoms)
    return TrajectoryStateA(x=x, p=p, t=0.0)


@dataclass(frozen=True)
class WidthEstimate:
    width: float
    stderr: float
    n: int


def pooled_width(momenta) -> WidthEstimate:
    """Unbiased sample standard deviation of all finite momenta.

    The standard error uses the normal-theory formula ``width / sqrt(2 (n - 1))``,
    which treats the pooled samples as independent.
    """
    p = np.asarray(momenta, dtype=float).ravel()
    p = p[np.isfinite(p)]
    if p.size < 2:
        raise ValueError("need at least two momenta")
    w = float(np.std(p, ddof=1))
    return WidthEstimate(w, w / math.sqrt(2.0 * (p.size - 1)), int(p.size))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    density: np.ndarray
    gaussian: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


def momentum_histogram(momenta, bins="fd") -> Histogram:
    """Normalized histogram with the Gaussian of the same mean and width.

    ``bins`` is anything :func:`numpy.histogram_bin_edges` accepts; the
    default is the Freedman-Diaconis rule.
    """
    p = np.asarray(momenta, dtype=float).ravel()
    p = p[np.isfinite(p)]
    if p.size == 0:
        raise ValueError("empty momentum sample")
    edges = np.histogram_bin_edges(p, bins=bins)
    density, edges = np.histogram(p, bins=edges, density=True)
    mu = float(np.mean(p))
    sd = float(np.std(p, ddof=1)) if p.size > 1 else 0.0
    centers = 0.5 * (edges[1:] + edges[:-1])
    gauss = sps.norm.pdf(centers, mu, sd) if sd > 0 else np.zeros_like(centers)
    return Histogram(edges=edges, density=density, gaussian=gauss)


@dataclass(frozen=True)
class GaussianityReport:
    excess_kurtosis: float
    kurtosis_stderr: float
    histogram_deviation: float
    n: int

    def is_gaussian(self, n_sigma: float = 3.0) -> bool:
        return abs(self.excess_kurtosis) <= n_sigma * self.kurtosis_stderr


def gaussianity(momenta, bins="fd") -> GaussianityReport:
    """Excess kurtosis with standard error sqrt(24/n), and the largest
    histogram-minus-Gaussian density deviation relative to the Gaussian peak."""
    p = np.asarray(momenta, dtype=float).ravel()
    p = p[np.isfinite(p)]
    n = p.size
    kurt = float(sps.kurtosis(p, fisher=True, bias=False)) if n > 3 else math.nan
    h = momentum_histogram(p, bins)
    peak = float(np.max(h.gaussian)) if h.gaussian.size else 0.0
    dev = float(np.max(np.abs(h.density - h.gaussian)) / peak) if peak > 0 else math.nan
    return GaussianityReport(kurt, math.sqrt(24.0 / n) if n else math.nan, dev, int(n))


def spatial_order_diagnostic(positions, wavenumber: float = 1.0) -> float:
    """Mean of |sum_j cos(k x_j)| / N over all configurations; 1 for a perfect pattern."""
    x = np.asarray(positions, dtype=float)
    order = np.abs(np.mean(np.cos(wavenumber * x), axis=-1))
    return float(np.nanmean(order))


@dataclass
class MomentAccumulator:
    """Streaming central moments up to fourth order.

    ``merge`` is associative and commutative (up to rounding), so partial
    summaries from independent workers can be combined in any order.
    """

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    @classmethod
    def from_samples(cls, values) -> "MomentAccumulator":
        v = np.asarray(values, dtype=float).ravel()
        v = v[np.isfinite(v)]
        if v.size == 0:
            return cls()
        mu = float(np.mean(v))
        d = v - mu
        return cls(int(v.size), mu, float(np.sum(d**2)), float(np.sum(d**3)), float(np.sum(d**4)))

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.n == 0:
            return MomentAccumulator(self.n, self.mean, self.m2, self.m3, self.m4)
        if self.n == 0:
            return MomentAccumulator(other.n, other.mean, other.m2, other.m3, other.m4)
        na, nb = self.n, other.n
        n = na + nb
        delta = other.mean - self.mean
        mean = self.mean + delta * nb / n
        m2 = self.m2 + other.m2 + delta**2 * na * nb / n
        m3 = (
            self.m3
            + other.m3
            + delta**3 * na * nb * (na - nb) / n**2
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n
        )
        m4 = (
            self.m4
            + other.m4
            + delta**4 * na * nb * (na * na - na * nb + nb * nb) / n**3
            + 6.0 * delta**2 * (na * na * other.m2 + nb * nb * self.m2) / n**2
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n
        )
        return MomentAccumulator(n, mean, m2, m3, m4)

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else math.nan

    @property
    def width(self) -> float:
        return math.sqrt(self.variance)

    @property
    def excess_kurtosis(self) -> float:
        """Biased (population) excess kurtosis."""
        if self.n < 2 or self.m2 == 0:
            return math.nan
        return self.n * self.m4 / self.m2**2 - 3.0


@dataclass(frozen=True)
class SteadyStateEstimate:
    """Stationary width from a time window, with a trajectory-batch error bar.

    Samples inside the window are time- and atom-correlated, so the error bar
    comes from the scatter of the variance between disjoint trajectory
    batches rather than from the pooled count.
    """

    width: float
    stderr: float
    naive_stderr: float
    n_samples: int
    n_batches: int
    window: tuple
    gaussianity: GaussianityReport
    kurtosis_stderr_batch: float


def steady_state_width(momenta, times, fraction: float = 0.2, n_batches: int = 20) -> SteadyStateEstimate:
    """Pool the last ``fraction`` of the output times of a ``(traj, time, atom)`` array."""
    p = np.asarray(momenta, dtype=float)
    t = np.asarray(times, dtype=float)
    if p.ndim != 3 or p.shape[1] != t.size:
        raise ValueError("momenta must have shape (n_traj, n_times, n_atoms) matching times")
    t0 = t[-1] - fraction * (t[-1] - t[0])
    sel = t >= t0
    window = p[:, sel, :]
    keep = np.all(np.isfinite(window), axis=(1, 2))
    window = window[keep]
    n_traj = window.shape[0]
    if n_traj < 2:
        raise ValueError("need at least two finite trajectories")
    pooled = pooled_width(window)
    nb = max(2, min(n_batches, n_traj))
    batches = np.array_split(np.arange(n_traj), nb)
    var_b = np.array([np.var(window[b], ddof=1) for b in batches])
    kurt_b = np.array([sps.kurtosis(window[b].ravel(), bias=False) for b in batches])
    se_var = float(np.std(var_b, ddof=1) / math.sqrt(nb))
    se_width = se_var / (2.0 * pooled.width) if pooled.width > 0 else 0.0
    report = gaussianity(window)
    se_kurt = float(np.std(kurt_b, ddof=1) / math.sqrt(nb))
    return SteadyStateEstimate(
        width=pooled.width,
        stderr=se_width,
        naive_stderr=pooled.stderr,
        n_samples=pooled.n,
        n_batches=nb,
        window=(float(t[sel][0]), float(t[-1])),
        gaussianity=report,
        kurtosis_stderr_batch=se_kurt,
    )


@dataclass
class EnsembleSummary:
    """Width time series with analytic overlay and run counters."""

    times: np.ndarray
    widths: np.ndarray
    stderr: np.ndarray
    analytic: np.ndarray
    excess_kurtosis: np.ndarray
    order: np.ndarray
    n_samples: np.ndarray
    counters: dict = field(default_factory=dict)

    def deviations(self) -> np.ndarray:
        """|width - analytic| in units of the standard error."""
        return np.abs(self.widths - self.analytic) / self.stderr


def summarize(result, params: PhysicalParams, analytics: RelaxationAnalytics | None = None, initial_width=None):
    """Per-output-time pooled widths of an ensemble result."""
    n_t = result.times.size
    widths = np.empty(n_t)
    errs = np.empty(n_t)
    counts = np.empty(n_t, dtype=int)
    kurt = np.empty(n_t)
    order = np.empty(n_t)
    for i in range(n_t):
        pw = pooled_width(result.momenta[:, i, :])
        widths[i], errs[i], counts[i] = pw.width, pw.stderr, pw.n
        flat = result.momenta[:, i, :].ravel()
        flat = flat[np.isfinite(flat)]
        kurt[i] = sps.kurtosis(flat, bias=False) if flat.size > 3 else math.nan
        order[i] = spatial_order_diagnostic(result.positions[:, i, :], params.cavity.wavenumber)
    if analytics is not None and analytics.has_steady_state:
        w0 = widths[0] if initial_width is None else initial_width
        overlay = width_evolution(w0, result.times, analytics)
    else:
        overlay = np.full(n_t, math.nan)
    return EnsembleSummary(
        times=result.times,
        widths=widths,
        stderr=errs,
        analytic=overlay,
        excess_kurtosis=kurt,
        order=order,
        n_samples=counts,
        counters=result.report(),
    )


def write_csv(path, header, rows):
    """Write a CSV with a header row; floats are written with 10 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in row])
    return path


def write_width_csv(path, summary: EnsembleSummary, params: PhysicalParams):
    t_ms = params.units.to_si(summary.times, "time") * 1e3
    rows = zip(
        map(float, summary.times), map(float, t_ms), map(float, summary.widths),
        map(float, summary.stderr), map(float, summary.analytic), map(float, summary.excess_kurtosis),
        map(float, summary.order),
    )
    return write_csv(path, ["t", "t_ms", "dp", "stderr", "dp_analytic", "excess_kurtosis", "order"], rows)


def write_histogram_csv(path, hist: Histogram):
    rows = zip(map(float, hist.centers), map(float, hist.density), map(float, hist.gaussian))
    return write_csv(path, ["bin_center", "density", "gaussian_overlay"], rows)


def write_sweep_csv(path, rows, extra_columns=()):
    """Rows are dicts with keys delta_c, dp_inf, stderr, dp_analytic, dp_analytic_spont (+ extras)."""
    header = ["delta_c", "dp_inf", "stderr", "dp_analytic", "dp_analytic_spont", *extra_columns]
    return write_csv(path, header, ([r.get(h, math.nan) for h in header] for r in rows))
