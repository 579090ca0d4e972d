"""YAML run configuration.

Frequencies are plain numbers in units of gamma/2, or ``{hz: f}`` for an
ordinary frequency f in Hz (converted as 2 pi f).  Example::

    n_atoms: 5
    units: {half_linewidth_hz: 3.0e6, wavelength_nm: 780.0, mass_amu: 84.911789738}
    atom: {detuning: -500, linewidth: 2, shift_ratio: 0.05, dipole_second_moment: 0.4}
    cavity: {linewidth: 0.5, detuning_over_kappa: -1.0}
    drive: {pump_rabi: 21}
    simulation: {model: A, seed: 0, trajectories: 5000}
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from scipy import constants as sc

from .field import threshold_pump
from .params import AtomSpec, CavitySpec, PhysicalParams, UnitSystem, vacuum_rabi_from_shift_ratio
from .sde.engine import IntegratorConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "params_from_dict"]

DEFAULTS = {
    "n_atoms": 5,
    "units": {"half_linewidth_hz": 3.0e6, "wavelength_nm": 780.0, "mass_amu": 84.911789738},
    "atom": {"detuning": -500.0, "linewidth": 2.0, "shift_ratio": 0.05, "dipole_second_moment": 0.4},
    "cavity": {"linewidth": 0.5, "detuning_over_kappa": -1.0},
    "drive": {"pump_rabi": 21.0},
    "simulation": {
        "model": "A",
        "dt": None,
        "seed": 0,
        "trajectories": 5000,
        "spontaneous": False,
        "cross_noise": False,
        "frozen_detuning": False,
        "field_init": "deterministic",
        "temperature": 1.0,
        "t_max_ms": 9.0,
        "n_outputs": 61,
        "snapshot_ms": [0.1, 1.0, 9.0],
        "steady_rate_times": 8.0,
        "steady_fraction": 0.2,
        "sweep_over_kappa": [-1.5, -1.4, -1.2, -1.0, -0.8, -0.6, -0.3],
        "sweep_pump_over_threshold": 0.3,
    },
    "oracle": {"n_configs": 20, "n_max": 2, "bound": 0.01, "max_photons": 0.02},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in (override or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and "hz" not in val:
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _units(d: dict) -> UnitSystem:
    return UnitSystem(
        frequency_unit=2.0 * math.pi * float(d["half_linewidth_hz"]),
        wavelength=float(d["wavelength_nm"]) * 1e-9,
        mass=float(d["mass_amu"]) * sc.atomic_mass,
    )


def _freq(value, units: UnitSystem, key: str) -> float:
    if isinstance(value, dict):
        if set(value) != {"hz"}:
            raise ConfigError(f"{key}: frequency mapping must be {{hz: value}}")
        return float(units.from_si(2.0 * math.pi * float(value["hz"]), "frequency"))
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number or {{hz: value}}, got {value!r}") from None


def params_from_dict(cfg: dict) -> PhysicalParams:
    """Build :class:`PhysicalParams` from a (merged) configuration mapping."""
    units = _units(cfg["units"])
    n = int(cfg["n_atoms"])
    a, c, d = cfg["atom"], cfg["cavity"], cfg["drive"]
    kappa = _freq(c["linewidth"], units, "cavity.linewidth")
    if "detuning" in c:
        delta_c = _freq(c["detuning"], units, "cavity.detuning")
    elif "detuning_over_kappa" in c:
        delta_c = float(c["detuning_over_kappa"]) * kappa
    else:
        raise ConfigError("cavity needs detuning or detuning_over_kappa")
    atom_detuning = _freq(a["detuning"], units, "atom.detuning")
    linewidth = _freq(a.get("linewidth", 2.0), units, "atom.linewidth")
    if "vacuum_rabi" in a:
        g = _freq(a["vacuum_rabi"], units, "atom.vacuum_rabi")
    elif "shift_ratio" in a:
        g = vacuum_rabi_from_shift_ratio(float(a["shift_ratio"]), n, delta_c, atom_detuning, linewidth)
    else:
        raise ConfigError("atom needs vacuum_rabi or shift_ratio")
    mass = float(units.dimensionless_mass) if a.get("mass_amu") is None else float(
        units.from_si(float(a["mass_amu"]) * sc.atomic_mass, "mass")
    )
    atom = AtomSpec(
        mass=mass,
        detuning=atom_detuning,
        vacuum_rabi=g,
        pump_rabi=0.0,
        linewidth=linewidth,
        dipole_second_moment=float(a.get("dipole_second_moment", 0.4)),
    )
    params = PhysicalParams(atom=atom, cavity=CavitySpec(kappa, delta_c), n_atoms=n, units=units)
    if d.get("pump_over_threshold") is not None:
        return params.with_pump(float(d["pump_over_threshold"]) * threshold_pump(params))
    return params.with_pump(_freq(d.get("pump_rabi", 0.0), units, "drive.pump_rabi"))


@dataclass
class RunConfig:
    """Merged configuration; ``raw`` is echoed verbatim into run manifests."""

    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @property
    def sim(self) -> dict:
        return self.raw["simulation"]

    @property
    def oracle(self) -> dict:
        return self.raw["oracle"]

    def params(self, detuning_over_kappa: float | None = None, pump_over_threshold: float | None = None):
        raw = copy.deepcopy(self.raw)
        if detuning_over_kappa is not None:
            raw["cavity"].pop("detuning", None)
            raw["cavity"]["detuning_over_kappa"] = detuning_over_kappa
        if pump_over_threshold is not None:
            raw["drive"] = {"pump_over_threshold": pump_over_threshold}
        return params_from_dict(raw)

    def integrator(self, **overrides) -> IntegratorConfig:
        s = dict(self.sim)
        s.update({k: v for k, v in overrides.items() if v is not None})
        return IntegratorConfig(
            model=str(s["model"]),
            dt=None if s["dt"] is None else float(s["dt"]),
            seed=int(s["seed"]),
            spontaneous=bool(s["spontaneous"]),
            cross_noise=bool(s["cross_noise"]),
            frozen_detuning=bool(s["frozen_detuning"]),
            field_init=str(s["field_init"]),
        )

    def update_simulation(self, **values) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw["simulation"].update({k: v for k, v in values.items() if v is not None})
        return RunConfig(raw)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data = {}
    if path is not None:
        text = Path(path).read_text()
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError("configuration file must contain a mapping")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown configuration sections: {sorted(unknown)}")
    raw = _merge(DEFAULTS, data)
    raw = _merge(raw, overrides or {})
    cfg = RunConfig(raw)
    cfg.params()
    cfg.integrator()
    return cfg
