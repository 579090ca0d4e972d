"""scikit-learn style facade over the ensemble integrator."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .coefficients import relaxation_analytics
from .params import paper_params
from .sde.engine import IntegratorConfig, run_ensemble
from .stats import InitialCondition, pooled_width

__all__ = ["CoolingSimulator"]


class CoolingSimulator(TransformerMixin, BaseEstimator):
    """Propagate ensembles of atomic phase-space states under cavity cooling.

    Each row of ``X`` is one trajectory's initial state ``[x_1..x_N, p_1..p_N]``
    in internal units (positions in 1/k, momenta in hbar k).

    Parameters
    ----------
    detuning_over_kappa : float
        Cavity detuning Delta_c / kappa.
    pump_over_threshold : float or None
        Pump strength relative to the self-organization threshold; when None,
        ``pump_rabi`` is used.
    pump_rabi : float
        Pump Rabi frequency in units of gamma/2.
    n_atoms, kappa, atom_detuning, shift_ratio
        Remaining physical parameters (see :func:`cavcool.params.paper_params`).
    model : {"A", "B"}
        Cavity-eliminated or semiclassical-field dynamics.
    duration : float or None
        Propagation time; ``None`` means 8 / Gamma_cool.
    n_outputs : int
        Number of recorded times in ``fit``.
    dt, spontaneous, cross_noise, seed
        Integrator settings (see :class:`cavcool.sde.IntegratorConfig`).

    Attributes
    ----------
    times_ : ndarray
        Recorded times of the last ``fit``.
    widths_, width_stderr_ : ndarray
        Pooled momentum width and its standard error at each time.
    final_states_ : ndarray
        Final ``[x, p]`` of every trajectory.
    analytics_ : RelaxationAnalytics
    n_features_in_ : int
    """

    def __init__(
        self,
        detuning_over_kappa=-1.0,
        pump_over_threshold=None,
        pump_rabi=21.0,
        n_atoms=5,
        kappa=0.5,
        atom_detuning=-500.0,
        shift_ratio=0.05,
        model="A",
        duration=None,
        n_outputs=41,
        dt=None,
        spontaneous=False,
        cross_noise=False,
        seed=0,
    ):
        self.detuning_over_kappa = detuning_over_kappa
        self.pump_over_threshold = pump_over_threshold
        self.pump_rabi = pump_rabi
        self.n_atoms = n_atoms
        self.kappa = kappa
        self.atom_detuning = atom_detuning
        self.shift_ratio = shift_ratio
        self.model = model
        self.duration = duration
        self.n_outputs = n_outputs
        self.dt = dt
        self.spontaneous = spontaneous
        self.cross_noise = cross_noise
        self.seed = seed

    def physical_params(self):
        return paper_params(
            self.detuning_over_kappa,
            pump_over_threshold=self.pump_over_threshold,
            pump_rabi=self.pump_rabi,
            n_atoms=self.n_atoms,
            kappa=self.kappa,
            atom_detuning=self.atom_detuning,
            shift_ratio=self.shift_ratio,
        )

    def _config(self):
        return IntegratorConfig(
            model=self.model, dt=self.dt, seed=self.seed, spontaneous=self.spontaneous, cross_noise=self.cross_noise
        )

    def _duration(self, params):
        if self.duration is not None:
            if not self.duration > 0:
                raise ValueError("duration must be positive")
            return float(self.duration)
        an = relaxation_analytics(params)
        if not an.has_steady_state:
            raise ValueError("duration is required when there is no cooling (Delta_c >= 0)")
        return 8.0 / an.cooling_rate

    def _validate(self, X, reset):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        if X.shape[1] != 2 * self.n_atoms:
            raise ValueError(f"X has {X.shape[1]} features; expected 2 * n_atoms = {2 * self.n_atoms}")
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but the simulator was fitted with {self.n_features_in_}")
        return X

    def fit(self, X, y=None):
        """Integrate every row of ``X`` and record the pooled momentum width."""
        X = self._validate(X, reset=True)
        params = self.physical_params()
        T = self._duration(params)
        times = np.linspace(0.0, T, int(self.n_outputs))
        res = run_ensemble(params, self._config(), X.shape[0], times, initial_states=X)
        widths = [pooled_width(res.momenta[:, i, :]) for i in range(res.times.size)]
        self.times_ = res.times
        self.widths_ = np.array([w.width for w in widths])
        self.width_stderr_ = np.array([w.stderr for w in widths])
        self.final_states_ = np.concatenate([res.positions[:, -1, :], res.momenta[:, -1, :]], axis=1)
        self.analytics_ = relaxation_analytics(params)
        self.abort_count_ = res.abort_count
        return self

    def transform(self, X):
        """Return the states reached from the rows of ``X`` after ``duration``."""
        check_is_fitted(self, "n_features_in_")
        X = self._validate(X, reset=False)
        params = self.physical_params()
        T = self._duration(params)
        res = run_ensemble(params, self._config(), X.shape[0], [0.0, T], initial_states=X)
        return np.concatenate([res.positions[:, -1, :], res.momenta[:, -1, :]], axis=1)

    def sample_initial(self, n_traj, temperature=1.0, random_state=None):
        """Maxwell-Boltzmann initial states suitable as ``X``."""
        rng = np.random.default_rng(random_state)
        params = self.physical_params()
        sampler = InitialCondition(temperature)
        rows = [np.concatenate(sampler.sample(params, rng)) for _ in range(int(n_traj))]
        return np.array(rows)

    def score(self, X=None, y=None):
        """Negative largest deviation of the fitted widths from the analytic curve, in standard errors."""
        check_is_fitted(self, "widths_")
        from .coefficients import width_evolution

        if not self.analytics_.has_steady_state:
            return float("nan")
        ana = width_evolution(self.widths_[0], self.times_, self.analytics_)
        return -float(np.max(np.abs(self.widths_ - ana)[1:] / self.width_stderr_[1:]))
