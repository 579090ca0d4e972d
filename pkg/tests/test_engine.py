import dataclasses
import math

import numpy as np
import pytest

from cavcool.coefficients import cross_matrix, diffusion_matrix, drift_force, friction_term
from cavcool.params import paper_params
from cavcool.sde import IntegratorConfig, run_ensemble, step_model_A, step_model_B
from cavcool.sde.engine import (
    NumericalFailure,
    TrajectoryStateA,
    TrajectoryStateB,
    default_dt,
    trajectory_streams,
)
from cavcool.stats import InitialCondition


def _repeat(x, p, n):
    return np.tile(np.concatenate([x, p]), (n, 1))


def test_free_flight_without_pump(rng):
    p = paper_params(-1.0, pump_rabi=0.0)
    x0 = rng.uniform(0, 6, 5)
    p0 = rng.normal(0, 20, 5)
    cfg = IntegratorConfig(dt=0.5, seed=1)
    res = run_ensemble(p, cfg, 1, [0.0, 100.0], initial_states=_repeat(x0, p0, 1))
    np.testing.assert_allclose(res.momenta[0, -1], p0, rtol=0, atol=0)
    np.testing.assert_allclose(res.positions[0, -1], x0 + p0 / p.mass * 100.0, rtol=1e-12)


def test_single_atom_at_antinode_rests():
    p = paper_params(-1.0, n_atoms=1)
    res = run_ensemble(p, IntegratorConfig(dt=1.0), 3, [0.0, 50.0], initial_states=np.zeros((3, 2)))
    assert np.all(res.momenta == 0) and np.all(res.positions == 0)


def test_single_step_moments(params):
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 2 * math.pi, 5)
    p0 = rng.normal(0, 10, 5)
    dt = 50.0
    n = 40000
    res = run_ensemble(params, IntegratorConfig(dt=dt, seed=3), n, [0.0, dt], initial_states=_repeat(x, p0, n))
    dp = res.momenta[:, -1] - p0
    mean = (drift_force(x, params) + friction_term(x, p0, params)) * dt
    cov = 2.0 * diffusion_matrix(x, params) * dt
    se = np.sqrt(np.diag(cov) / n)
    assert np.all(np.abs(dp.mean(0) - mean) < 4 * se)
    emp = np.cov(dp.T)
    np.testing.assert_allclose(emp, cov, atol=0.05 * np.abs(cov).max())
    w = np.linalg.eigvalsh(emp)
    assert w[-2] < 1e-9 * w[-1]


def test_cross_noise_covariance(params):
    rng = np.random.default_rng(8)
    shifted = params.with_cavity_detuning(-0.3 * params.kappa)
    x = rng.uniform(0, 2 * math.pi, 5)
    p0 = np.zeros(5)
    dt = 50.0
    n = 40000
    cfg = IntegratorConfig(dt=dt, seed=4, cross_noise=True)
    res = run_ensemble(shifted, cfg, n, [0.0, dt], initial_states=_repeat(x, p0, n))
    dp = res.momenta[:, -1] - p0
    dx = res.positions[:, -1] - x - res.momenta[:, -1] / shifted.mass * dt
    c = (dp - dp.mean(0)).T @ (dx - dx.mean(0)) / (n - 1)
    eta = cross_matrix(x, shifted)
    np.testing.assert_allclose(c, eta * dt, atol=0.05 * np.abs(eta * dt).max())


def test_step_functions_match_ensemble(params):
    rng = np.random.default_rng(0)
    x, p = rng.uniform(0, 6, 5), rng.normal(0, 10, 5)
    cfg = IntegratorConfig(dt=10.0, seed=0)
    a = step_model_A(TrajectoryStateA(x, p), params, cfg, np.random.default_rng(1))
    b = step_model_A(TrajectoryStateA(x, p), params, cfg, np.random.default_rng(1))
    np.testing.assert_array_equal(a.p, b.p)
    assert a.t == 10.0
    sb = step_model_B(TrajectoryStateB(x, p, 1.0, 0.0), params, IntegratorConfig(model="B", dt=0.01), rng)
    assert sb.t == 0.01 and np.isfinite(sb.alpha_r)


def test_step_failure_raises(params):
    bad = TrajectoryStateA(np.full(5, np.nan), np.zeros(5))
    with pytest.raises(NumericalFailure):
        step_model_A(bad, params, IntegratorConfig(dt=1.0), np.random.default_rng(0))


def test_trajectory_streams_are_distinct():
    a = [g.standard_normal() for g in trajectory_streams(0, 0)]
    b = [g.standard_normal() for g in trajectory_streams(0, 1)]
    assert len(set(a + b)) == 6
    assert a == [g.standard_normal() for g in trajectory_streams(0, 0)]


@pytest.mark.parametrize("model", ["A", "B"])
def test_results_do_not_depend_on_worker_count(params, model):
    cfg = IntegratorConfig(model=model, seed=11, dt=None if model == "A" else 0.05)
    t = [0.0, 200.0]
    one = run_ensemble(params, cfg, 6, t, workers=1)
    two = run_ensemble(params, cfg, 6, t, workers=2)
    np.testing.assert_array_equal(one.momenta, two.momenta)
    np.testing.assert_array_equal(one.positions, two.positions)


def test_first_index_selects_trajectories(params):
    cfg = IntegratorConfig(seed=2)
    full = run_ensemble(params, cfg, 4, [0.0, 300.0])
    tail = run_ensemble(params, cfg, 2, [0.0, 300.0], first_index=2)
    np.testing.assert_array_equal(full.momenta[2:], tail.momenta)


def test_spontaneous_switch_keeps_cavity_noise(params):
    t = [0.0, 1.0]
    on = run_ensemble(params, IntegratorConfig(seed=3, spontaneous=True, dt=1.0), 2, t)
    off = run_ensemble(params, IntegratorConfig(seed=3, spontaneous=False, dt=1.0), 2, t)
    np.testing.assert_array_equal(on.momenta[:, 0], off.momenta[:, 0])
    assert not np.array_equal(on.momenta[:, 1], off.momenta[:, 1])


def test_coarsened_path_matches_fine_path(params):
    t = [0.0, 20.0]
    fine = run_ensemble(params, IntegratorConfig(seed=9, dt=0.5), 3, t)
    coarse = run_ensemble(params, IntegratorConfig(seed=9, dt=1.0, coarsen=2), 3, t)
    np.testing.assert_allclose(coarse.momenta[:, -1], fine.momenta[:, -1], atol=0.02)


def _frozen(params):
    return dataclasses.replace(params, atom=dataclasses.replace(params.atom, mass=1e12))


def _em_field_variance(params, x, dt):
    cp = params.couplings
    d = params.delta_c - cp.U * np.sum(np.cos(x) ** 2)
    kp = params.kappa
    return 0.5 * kp / (2 * kp - (kp * kp + d * d) * dt)


def test_frozen_atoms_give_coherent_field(params):
    p = _frozen(params)
    x = np.array([0.1, 0.5, 1.0, 2.5, 3.0])
    n, dt = 2000, 0.01
    times = np.concatenate([[0.0], np.linspace(30.0, 60.0, 16)])
    cfg = IntegratorConfig(model="B", dt=dt, seed=1, field_amplitude=(0.0, 0.0))
    res = run_ensemble(p, cfg, n, times, initial_states=_repeat(x, np.zeros(5), n))
    f = res.fields[:, 1:, :].reshape(-1, 2)
    from cavcool.field import coherent_amplitude

    alpha = coherent_amplitude(x, p, spontaneous=False)
    se = 0.5 / math.sqrt(n)
    assert abs(f[:, 0].mean() - alpha.real) < 4 * se
    assert abs(f[:, 1].mean() - alpha.imag) < 4 * se
    var = f.var(axis=0)
    np.testing.assert_allclose(var, _em_field_variance(p, x, dt), rtol=0.03)


def test_field_noise_converges_at_first_weak_order(params):
    p = _frozen(params)
    x = np.zeros(5)
    n = 2000
    times = np.concatenate([[0.0], np.linspace(40.0, 200.0, 41)])
    errs = []
    for dt in (0.4, 0.2):
        cfg = IntegratorConfig(model="B", dt=dt, seed=2, field_amplitude=(0.0, 0.0))
        res = run_ensemble(p, cfg, n, times, initial_states=_repeat(x, np.zeros(5), n))
        f = res.fields[:, 1:, :]
        var = 0.5 * (f[..., 0].var() + f[..., 1].var())
        em = _em_field_variance(p, x, dt)
        assert var == pytest.approx(em, rel=0.03)
        errs.append(var - 0.25)
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.35)


def test_default_dt(params):
    dt_a = default_dt(params, "A")
    assert dt_a <= 1e-3 * (8 / 4.644e-5) and dt_a <= 0.05 * params.mass / math.sqrt(params.mass)
    dt_b = default_dt(params, "B")
    assert dt_b <= 1e-2 / params.kappa
    assert default_dt(params.with_pump(0.0), "A") > 0


def test_invalid_configs():
    for kw in ({"model": "C"}, {"dt": 0.0}, {"coarsen": 0}, {"field_init": "thermal"}):
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)


def test_bad_output_times_and_states(params):
    with pytest.raises(ValueError):
        run_ensemble(params, IntegratorConfig(), 2, [])
    with pytest.raises(ValueError):
        run_ensemble(params, IntegratorConfig(), 2, [-1.0, 1.0])
    with pytest.raises(ValueError):
        run_ensemble(params, IntegratorConfig(), 2, [0.0, 1.0], initial_states=np.zeros((2, 3)))


def test_excessive_aborts_raise(params):
    cfg = IntegratorConfig(model="B", dt=1e4, seed=0)
    with pytest.raises(NumericalFailure) as exc:
        run_ensemble(params, cfg, 4, [0.0, 1e6])
    assert exc.value.result.abort_count > 0
    res = run_ensemble(params, cfg, 4, [0.0, 1e6], check_aborts=False)
    assert np.all(np.isnan(res.momenta[res.aborted]))


def test_report_fields(params):
    cfg = IntegratorConfig(model="B", dt=0.05, spontaneous=True)
    res = run_ensemble(params, cfg, 2, [0.0, 5.0], InitialCondition(0.5))
    rep = res.report()
    assert rep["n_traj"] == 2 and rep["aborted"] == 0 and rep["dt"] == 0.05
    assert res.fields.shape == (2, 2, 2)
