import math

import pytest

from cavcool.config import ConfigError, DEFAULTS, load_config, params_from_dict, _merge
from cavcool.field import threshold_pump
from cavcool.params import paper_params


def _write(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return path


def test_defaults_reproduce_reference_parameters():
    p = load_config().params()
    ref = paper_params(-1.0)
    assert p.kappa == ref.kappa and p.delta_c == pytest.approx(ref.delta_c)
    assert p.couplings.U == pytest.approx(ref.couplings.U, rel=1e-12)
    assert p.mass == pytest.approx(ref.mass, rel=1e-9)


def test_hz_frequencies_are_converted(tmp_path):
    cfg = load_config(_write(tmp_path, "cavity: {linewidth: {hz: 1.5e6}, detuning_over_kappa: -1.0}\n"))
    assert cfg.params().kappa == pytest.approx(0.5, rel=1e-12)


def test_explicit_detuning_and_vacuum_rabi(tmp_path):
    text = "cavity: {detuning: -0.2}\natom: {vacuum_rabi: 2.0}\n"
    p = load_config(_write(tmp_path, text)).params()
    assert p.delta_c == -0.2 and p.atom.vacuum_rabi == 2.0


def test_shift_ratio_sets_coupling():
    p = load_config().params(-0.3)
    assert p.n_atoms * p.couplings.U / p.delta_c == pytest.approx(0.05, rel=1e-6)


def test_pump_over_threshold_wins(tmp_path):
    cfg = load_config(_write(tmp_path, "drive: {pump_rabi: 3.0, pump_over_threshold: 0.3}\n"))
    p = cfg.params()
    assert p.atom.pump_rabi == pytest.approx(0.3 * threshold_pump(p))
    assert cfg.params(-0.6, 0.5).atom.pump_rabi == pytest.approx(0.5 * threshold_pump(cfg.params(-0.6)))


@pytest.mark.parametrize(
    "text",
    [
        "bogus: {a: 1}\n",
        "cavity: {linewidth: {khz: 3}}\n",
        "cavity: {linewidth: fast}\n",
        "- 1\n- 2\n",
        "simulation: {model: C}\n",
    ],
)
def test_bad_configurations(tmp_path, text):
    with pytest.raises((ConfigError, ValueError)):
        load_config(_write(tmp_path, text))


def test_missing_detuning_and_coupling():
    raw = _merge(DEFAULTS, {})
    raw["cavity"] = {"linewidth": 0.5}
    with pytest.raises(ConfigError):
        params_from_dict(raw)
    raw = _merge(DEFAULTS, {})
    raw["atom"] = {"detuning": -500.0}
    with pytest.raises(ConfigError):
        params_from_dict(raw)


def test_simulation_overrides():
    cfg = load_config().update_simulation(seed=7, model=None, dt=0.1)
    ic = cfg.integrator(spontaneous=True)
    assert ic.seed == 7 and ic.model == "A" and ic.dt == 0.1 and ic.spontaneous
    assert math.isclose(float(cfg.sim["t_max_ms"]), 9.0)
