import math

import numpy as np
import pytest

from cavcool.coefficients import low_field_coefficients
from cavcool.experiments import compare_with_oracle, sample_low_field_configurations
from cavcool.field import coherent_amplitude
from cavcool.oracle import (
    build_liouvillian,
    force_operators,
    oracle_coefficients,
    steady_state,
)
from cavcool.params import paper_params


@pytest.fixture
def positions(params):
    return sample_low_field_configurations(params, 1, np.random.default_rng(7))[0]


@pytest.mark.parametrize("spontaneous", [False, True])
def test_liouvillian_preserves_trace(params, positions, spontaneous):
    L = build_liouvillian(positions, params, n_max=3, spontaneous=spontaneous)
    ones = np.eye(L.dim).reshape(-1, order="F")
    np.testing.assert_allclose(ones @ L.matrix, 0.0, atol=1e-10)
    sv = np.linalg.svd(L.matrix, compute_uv=False)
    assert sv[-1] < 1e-10 * sv[0] < sv[-2]


def test_steady_state_is_a_density_matrix(params, positions):
    st = steady_state(build_liouvillian(positions, params, n_max=3))
    np.testing.assert_allclose(st.rho, st.rho.conj().T, atol=1e-14)
    assert np.trace(st.rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(st.rho).min() >= 0
    assert st.residual < 1e-10


def test_vacuum_without_pump(params, positions):
    st = steady_state(build_liouvillian(positions, params.with_pump(0.0), n_max=2))
    assert st.rho[0, 0].real == pytest.approx(1.0)
    co = oracle_coefficients(positions, params.with_pump(0.0), spontaneous=False)
    for M in (co.phi, co.friction, co.diffusion, co.cross):
        np.testing.assert_allclose(M, 0.0, atol=1e-14)


def test_coherent_amplitude_is_recovered(params, positions):
    co = oracle_coefficients(positions, params, n_max=3, spontaneous=False)
    assert co.alpha == pytest.approx(coherent_amplitude(positions, params, spontaneous=False), rel=1e-6)


def test_force_operators_are_hermitian(params, positions):
    for F in force_operators(positions, params, n_max=3):
        np.testing.assert_allclose(F, F.conj().T, atol=1e-14)


def test_diffusion_symmetric_and_positive(params, positions):
    co = oracle_coefficients(positions, params)
    np.testing.assert_allclose(co.diffusion, co.diffusion.T, atol=0)
    assert np.linalg.eigvalsh(co.diffusion).min() > -1e-9 * np.abs(co.diffusion).max()


def test_truncation_converges(params, positions):
    lo = oracle_coefficients(positions, params, n_max=2)
    hi = oracle_coefficients(positions, params, n_max=4)
    for name in ("phi", "friction", "diffusion"):
        a, b = getattr(lo, name), getattr(hi, name)
        assert np.max(np.abs(a - b)) <= 1e-2 * np.max(np.abs(b))


def test_oracle_tracks_low_field_force(params, positions):
    co = oracle_coefficients(positions, params, spontaneous=False)
    ana = low_field_coefficients(positions, params)
    np.testing.assert_allclose(co.phi, ana.drift_force, rtol=0.02, atol=0.02 * np.abs(ana.drift_force).max())


def test_cross_term_vanishes_at_zero_crossing(params, positions):
    shifted = params.with_cavity_detuning(-params.kappa + params.couplings.U * np.sum(np.cos(positions) ** 2))
    co = oracle_coefficients(positions, shifted, spontaneous=False)
    scale = params.couplings.S ** 2 / params.kappa
    assert np.max(np.abs(co.cross)) <= 1e-3 * scale


def test_compare_with_oracle_rows(params):
    x = sample_low_field_configurations(params, 3, np.random.default_rng(1))
    cmp = compare_with_oracle(x, params)
    rows = list(cmp.rows())
    assert len(rows) == 3 and set(cmp.worst) == {"phi", "friction", "diffusion", "cross"}
    assert all(r["photon_number"] <= 0.03 for r in rows)


def test_invalid_truncation(params, positions):
    with pytest.raises(ValueError):
        build_liouvillian(positions, params, n_max=0)


def test_sampler_respects_photon_bound():
    p = paper_params(-1.0)
    x = sample_low_field_configurations(p, 20, np.random.default_rng(3), max_photons=0.02)
    assert x.shape == (20, 5)
    assert np.all(np.abs([coherent_amplitude(xi, p) for xi in x]) ** 2 <= 0.02)
    assert np.all((x >= 0) & (x < 2 * math.pi))


def test_converges_below_tolerance_from_three_photons(params):
    for x in sample_low_field_configurations(params, 5, np.random.default_rng(7)):
        lo = oracle_coefficients(x, params, n_max=3)
        hi = oracle_coefficients(x, params, n_max=4)
        for name in ("phi", "friction", "diffusion"):
            a, b = getattr(lo, name), getattr(hi, name)
            assert np.max(np.abs(a - b)) <= 1e-3 * np.max(np.abs(b))


@pytest.mark.parametrize("x", [0.3, 1.0, 2.0, 2.8])
def test_single_atom_diffusion_in_small_shift_limit(x):
    p = paper_params(-1.0, n_atoms=1, shift_ratio=1e-4)
    co = oracle_coefficients([x], p, n_max=2)
    ana = low_field_coefficients(np.array([x]), p, spontaneous=True)
    assert co.diffusion[0, 0] == pytest.approx(ana.diffusion_matrix[0, 0], rel=1e-3)
    assert co.friction[0, 0] == pytest.approx(ana.friction_matrix[0, 0], rel=1e-3)


def test_residual_deviation_is_linear_in_shift():
    dev = []
    for ratio in (0.05, 0.005):
        p = paper_params(-1.0, n_atoms=1, shift_ratio=ratio)
        co = oracle_coefficients([1.0], p, n_max=3, spontaneous=False)
        ana = low_field_coefficients(np.array([1.0]), p)
        dev.append(co.friction[0, 0] / ana.friction_matrix[0, 0] - 1.0)
    assert dev[0] / dev[1] == pytest.approx(10.0, rel=0.1)
    for ratio in (0.05, 0.005):
        p = paper_params(-1.0, n_atoms=1, shift_ratio=ratio, pump_rabi=0.21)
        co = oracle_coefficients([1.0], p, n_max=3, spontaneous=False)
        ana = low_field_coefficients(np.array([1.0]), p)
        assert co.friction[0, 0] / ana.friction_matrix[0, 0] - 1.0 == pytest.approx(dev.pop(0), rel=1e-3)
