import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavcool.stats import (
    InitialCondition,
    MomentAccumulator,
    gaussianity,
    momentum_histogram,
    pooled_width,
    sample_initial,
    spatial_order_diagnostic,
    steady_state_width,
    write_histogram_csv,
    write_sweep_csv,
)


def test_zero_temperature_gives_atoms_at_rest(params, rng):
    s = sample_initial(params, temperature=0.0, rng=rng)
    assert np.all(s.p == 0)
    assert np.all((s.x >= 0) & (s.x < 2 * math.pi))


def test_maxwell_boltzmann_variance(params, rng):
    x, p = InitialCondition(1.0).sample(params, rng, n_atoms=1_000_000)
    assert np.var(p) == pytest.approx(params.mass, rel=0.005)
    assert np.mean(x) == pytest.approx(math.pi, rel=0.005)


def test_negative_temperature_rejected():
    with pytest.raises(ValueError):
        InitialCondition(-1.0)


def test_pooled_width_of_constant_sample():
    w = pooled_width(np.full((10, 5), 3.0))
    assert w.width == 0 and w.n == 50


def test_pooled_width_of_gaussian(rng):
    p = rng.normal(0, 7.0, (2000, 5))
    w = pooled_width(p)
    assert abs(w.width - 7.0) < 4 * w.stderr
    assert w.stderr == pytest.approx(w.width / math.sqrt(2 * (w.n - 1)))


def test_pooled_width_skips_aborted_rows(rng):
    p = rng.normal(0, 1.0, (100, 5))
    p[3] = np.nan
    assert pooled_width(p).n == 495


def test_kurtosis(rng):
    g = gaussianity(rng.normal(size=200_000))
    assert g.is_gaussian()
    u = gaussianity(rng.uniform(-1, 1, 200_000))
    assert u.excess_kurtosis == pytest.approx(-1.2, abs=0.02)
    assert not u.is_gaussian()
    assert g.kurtosis_stderr == pytest.approx(math.sqrt(24 / 200_000))


@settings(max_examples=30, deadline=None)
@given(st.integers(10, 5000), st.integers(0, 2**32 - 1))
def test_histogram_is_normalized(n, seed):
    h = momentum_histogram(np.random.default_rng(seed).normal(size=n))
    assert h.integral == pytest.approx(1.0, abs=1e-9)
    assert h.centers.size == h.density.size == h.gaussian.size


def test_empty_histogram_rejected():
    with pytest.raises(ValueError):
        momentum_histogram(np.array([np.nan]))


def test_spatial_order(rng):
    assert spatial_order_diagnostic(np.zeros((10, 5))) == 1.0
    x = rng.uniform(0, 2 * math.pi, (200_000, 5))
    assert spatial_order_diagnostic(x) == pytest.approx(math.sqrt(1 / (5 * math.pi)), rel=0.03)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 300), st.integers(2, 300), st.integers(0, 2**32 - 1))
def test_moment_merge_matches_pooled(na, nb, seed):
    rng = np.random.default_rng(seed)
    a = rng.gamma(2.0, size=na)
    b = rng.gamma(2.0, size=nb) + 1.0
    merged = MomentAccumulator.from_samples(a).merge(MomentAccumulator.from_samples(b))
    ref = MomentAccumulator.from_samples(np.concatenate([a, b]))
    for name in ("n", "mean", "m2", "m3", "m4"):
        assert getattr(merged, name) == pytest.approx(getattr(ref, name), rel=1e-9, abs=1e-9)


def test_moment_accumulator_empty():
    a = MomentAccumulator.from_samples([1.0, 2.0])
    assert a.merge(MomentAccumulator()).n == 2
    assert MomentAccumulator().merge(a).mean == 1.5
    assert math.isnan(MomentAccumulator().variance)


def test_steady_state_width(rng):
    p = rng.normal(0, 5.0, (400, 50, 5))
    t = np.linspace(0, 10, 50)
    est = steady_state_width(p, t, fraction=0.2)
    assert est.window[0] >= 8.0 and est.window[1] == 10.0
    assert abs(est.width - 5.0) < 4 * est.stderr
    assert est.n_batches == 20
    with pytest.raises(ValueError):
        steady_state_width(p, t[:-1])
    with pytest.raises(ValueError):
        steady_state_width(p[:1], t)


def test_batch_error_exceeds_naive_for_correlated_samples(rng):
    base = rng.normal(0, 5.0, (400, 1, 5))
    p = np.repeat(base, 30, axis=1) + 0.01 * rng.normal(size=(400, 30, 5))
    est = steady_state_width(p, np.arange(30.0), fraction=1.0)
    assert est.stderr > 3 * est.naive_stderr


def test_csv_headers(tmp_path, rng):
    h = momentum_histogram(rng.normal(size=100))
    with open(write_histogram_csv(tmp_path / "h.csv", h)) as fh:
        assert next(csv.reader(fh)) == ["bin_center", "density", "gaussian_overlay"]
    path = write_sweep_csv(tmp_path / "s" / "sweep.csv", [{"delta_c": -0.5, "dp_inf": 1.0}], ["order"])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["delta_c", "dp_inf", "stderr", "dp_analytic", "dp_analytic_spont", "order"]
    assert rows[1][:2] == ["-0.5", "1"] and rows[1][2] == "nan"
