import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavcool.sde.noise import arrow_factor, eigen_factor, factorize_diffusion, field_model_diffusion


def test_zero_matrix():
    f = factorize_diffusion(np.zeros((3, 3)))
    assert np.all(f.factor == 0) and f.clipped_mass == 0


def test_rank_one():
    v = np.array([1.0, -2.0, 0.5])
    f = factorize_diffusion(np.outer(v, v))
    np.testing.assert_allclose(f.clipped_covariance, np.outer(v, v), atol=1e-12)


def test_random_psd(rng):
    G = rng.normal(size=(7, 7))
    D = G @ G.T
    f = factorize_diffusion(D)
    np.testing.assert_allclose(f.clipped_covariance, D, atol=1e-10)
    assert f.clipped_mass == 0


def test_negative_modes_are_clipped():
    D = np.diag([2.0, -0.5])
    f = factorize_diffusion(D)
    assert f.clipped_mass == pytest.approx(0.5)
    np.testing.assert_allclose(f.clipped_covariance, np.diag([2.0, 0.0]))
    assert f.clipped_fraction == pytest.approx(0.5 / 1.5)


def test_rejects_asymmetric_and_non_square():
    with pytest.raises(ValueError):
        factorize_diffusion([[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(ValueError):
        factorize_diffusion(np.ones((2, 3)))


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 6),
    st.floats(0.01, 10.0),
    st.floats(-3.0, 3.0),
    st.floats(-3.0, 3.0),
    st.integers(0, 2**32 - 1),
)
def test_arrow_factor_matches_covariance(n, a, ar, ai, seed):
    rng = np.random.default_rng(seed)
    b = rng.normal(size=n)
    c = rng.uniform(0.1, 5.0, n)
    D = field_model_diffusion((ar, ai), b, c, 2.0 * a)
    out = np.empty((n + 2, n + 2))
    ok = arrow_factor(a, b, ar, ai, c, out)
    psd = np.linalg.eigvalsh(D).min() >= -1e-12 * np.abs(D).max()
    if ok:
        np.testing.assert_allclose(out @ out.T, D, atol=1e-9 * np.abs(D).max())
    else:
        assert not psd or np.linalg.eigvalsh(D).min() < 1e-9 * np.abs(D).max()


def test_arrow_factor_refuses_indefinite():
    b = np.array([10.0])
    D = field_model_diffusion((1.0, 0.0), b, np.array([1.0]), 1.0)
    assert np.linalg.eigvalsh(D).min() < 0
    assert not arrow_factor(0.5, b, 1.0, 0.0, np.array([1.0]), np.empty((3, 3)))


def test_eigen_factor_matches_numpy(rng):
    G = rng.normal(size=(5, 5))
    D = G @ G.T - 0.5 * np.eye(5)
    out = np.empty((5, 5))
    clipped = eigen_factor(D, out)
    ref = factorize_diffusion(D)
    assert clipped == pytest.approx(ref.clipped_mass)
    np.testing.assert_allclose(out @ out.T, ref.clipped_covariance, atol=1e-10)
