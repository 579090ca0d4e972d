"""Physical constants, derived couplings and the internal unit system.

Internally every quantity is dimensionless: frequencies are measured in
units of gamma/2 of the atomic transition, momenta in hbar*k, positions in
1/k and time in 2/gamma.  With these choices hbar = 1 and k = 1, energies are
in units of hbar*gamma/2 and the atomic mass becomes ``1 / (2 * omega_r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import constants as sc

__all__ = [
    "AtomSpec",
    "CavitySpec",
    "DerivedCouplings",
    "UnitSystem",
    "PhysicalParams",
    "Diagnostic",
    "derive_couplings",
    "validate_regime",
    "vacuum_rabi_from_shift_ratio",
    "rubidium85_units",
    "paper_params",
]

RB85_MASS_AMU = 84.911789738
DEFAULT_DIPOLE_SECOND_MOMENT = 2.0 / 5.0


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between SI and the dimensionless internal units.

    Parameters
    ----------
    frequency_unit : float
        Angular frequency gamma/2 of the reference atom in rad/s.
    wavelength : float
        Cavity wavelength in m.
    mass : float
        Atomic mass in kg.
    """

    frequency_unit: float
    wavelength: float
    mass: float

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def time_unit(self) -> float:
        return 1.0 / self.frequency_unit

    @property
    def length_unit(self) -> float:
        return 1.0 / self.wavenumber

    @property
    def momentum_unit(self) -> float:
        return sc.hbar * self.wavenumber

    @property
    def energy_unit(self) -> float:
        return sc.hbar * self.frequency_unit

    @property
    def mass_unit(self) -> float:
        return self.momentum_unit * self.time_unit / self.length_unit

    @property
    def recoil_frequency(self) -> float:
        """Dimensionless recoil frequency hbar k^2 / (2 m) in units of gamma/2."""
        return sc.hbar * self.wavenumber**2 / (2.0 * self.mass) / self.frequency_unit

    @property
    def dimensionless_mass(self) -> float:
        return self.mass / self.mass_unit

    def _scale(self, kind: str) -> float:
        try:
            return {
                "frequency": self.frequency_unit,
                "time": self.time_unit,
                "length": self.length_unit,
                "momentum": self.momentum_unit,
                "energy": self.energy_unit,
                "mass": self.mass_unit,
                "temperature": self.energy_unit / sc.k,
            }[kind]
        except KeyError:
            raise ValueError(f"unknown quantity kind {kind!r}") from None

    def to_si(self, value, kind: str):
        return np.multiply(value, self._scale(kind))

    def from_si(self, value, kind: str):
        return np.divide(value, self._scale(kind))


def rubidium85_units(half_linewidth_hz: float = 3.0e6, wavelength_nm: float = 780.0) -> UnitSystem:
    """Units for the 85Rb D2 line, gamma/2 = 2 pi x ``half_linewidth_hz``."""
    return UnitSystem(
        frequency_unit=2.0 * math.pi * half_linewidth_hz,
        wavelength=wavelength_nm * 1e-9,
        mass=RB85_MASS_AMU * sc.atomic_mass,
    )


@dataclass(frozen=True)
class AtomSpec:
    """Single-species two-level atom, all values in internal units.

    ``linewidth`` is the full decay rate gamma, so the reference atom has
    ``linewidth = 2``.
    """

    mass: float
    detuning: float
    vacuum_rabi: float
    pump_rabi: float = 0.0
    linewidth: float = 2.0
    dipole_second_moment: float = DEFAULT_DIPOLE_SECOND_MOMENT

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.linewidth > 0:
            raise ValueError("linewidth must be positive")
        if not self.vacuum_rabi > 0:
            raise ValueError("vacuum Rabi frequency must be positive")
        if self.pump_rabi < 0:
            raise ValueError("pump Rabi frequency must be non-negative")
        if not 0 < self.dipole_second_moment <= 1:
            raise ValueError("dipole second moment must lie in (0, 1]")


@dataclass(frozen=True)
class CavitySpec:
    linewidth: float
    detuning: float
    wavenumber: float = 1.0

    def __post_init__(self):
        if not self.linewidth > 0:
            raise ValueError("cavity linewidth must be positive")
        if not self.wavenumber > 0:
            raise ValueError("wavenumber must be positive")


@dataclass(frozen=True)
class DerivedCouplings:
    """Effective couplings after eliminating the atomic excited state.

    Attributes
    ----------
    U : float
        Cavity frequency shift per atom at an antinode.
    S : float
        Coherent scattering amplitude from pump into cavity.
    gamma_prime : float
        Incoherent scattering rate via spontaneous decay.
    s : float
        Pump-to-vacuum-Rabi ratio Omega/g.
    omega_r : float
        Recoil frequency.
    cooperativity : float
        g^2 / (kappa gamma / 2).
    """

    U: float
    S: float
    gamma_prime: float
    s: float
    omega_r: float
    cooperativity: float

    @property
    def Gamma(self) -> float:
        return 0.5 * self.gamma_prime


def derive_couplings(atom: AtomSpec, cavity: CavitySpec) -> DerivedCouplings:
    if atom.detuning == 0:
        raise ValueError("atomic detuning must be non-zero (dispersive regime)")
    d = atom.detuning
    denom = d * d + 0.25 * atom.linewidth**2
    g = atom.vacuum_rabi
    U = d * g * g / denom
    S = d * g * atom.pump_rabi / denom
    gamma_prime = atom.linewidth * g * g / denom
    k = cavity.wavenumber
    return DerivedCouplings(
        U=U,
        S=S,
        gamma_prime=gamma_prime,
        s=atom.pump_rabi / g,
        omega_r=k * k / (2.0 * atom.mass),
        cooperativity=g * g / (cavity.linewidth * atom.linewidth / 2.0),
    )


def vacuum_rabi_from_shift_ratio(
    shift_ratio: float, n_atoms: int, cavity_detuning: float, atom_detuning: float, linewidth: float = 2.0
) -> float:
    """Back-solve g from the collective shift ratio N U / Delta_c."""
    U = shift_ratio * cavity_detuning / n_atoms
    g2 = U * (atom_detuning**2 + 0.25 * linewidth**2) / atom_detuning
    if g2 <= 0:
        raise ValueError("N U / Delta_c requires sign(U) == sign(Delta_a)")
    return math.sqrt(g2)


@dataclass(frozen=True)
class PhysicalParams:
    """Complete, immutable parameter set for one simulation."""

    atom: AtomSpec
    cavity: CavitySpec
    n_atoms: int = 5
    units: UnitSystem = field(default_factory=rubidium85_units)

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")

    @cached_property
    def couplings(self) -> DerivedCouplings:
        return derive_couplings(self.atom, self.cavity)

    @property
    def kappa(self) -> float:
        return self.cavity.linewidth

    @property
    def delta_c(self) -> float:
        return self.cavity.detuning

    @property
    def mass(self) -> float:
        return self.atom.mass

    def with_cavity_detuning(self, delta_c: float) -> "PhysicalParams":
        return replace(self, cavity=replace(self.cavity, detuning=delta_c))

    def with_pump(self, pump_rabi: float) -> "PhysicalParams":
        return replace(self, atom=replace(self.atom, pump_rabi=pump_rabi))

    def with_vacuum_rabi(self, g: float) -> "PhysicalParams":
        return replace(self, atom=replace(self.atom, vacuum_rabi=g))

    def to_si(self) -> dict:
        """Dimensionful view of the parameters (angular frequencies in rad/s)."""
        u = self.units
        f = lambda v: float(u.to_si(v, "frequency"))  # noqa: E731
        return {
            "mass": float(u.to_si(self.atom.mass, "mass")),
            "linewidth": f(self.atom.linewidth),
            "atom_detuning": f(self.atom.detuning),
            "vacuum_rabi": f(self.atom.vacuum_rabi),
            "pump_rabi": f(self.atom.pump_rabi),
            "dipole_second_moment": self.atom.dipole_second_moment,
            "cavity_linewidth": f(self.cavity.linewidth),
            "cavity_detuning": f(self.cavity.detuning),
            "wavenumber": float(self.cavity.wavenumber / u.length_unit),
            "n_atoms": self.n_atoms,
        }

    @classmethod
    def from_si(cls, values: dict, units: UnitSystem) -> "PhysicalParams":
        f = lambda v: float(units.from_si(v, "frequency"))  # noqa: E731
        atom = AtomSpec(
            mass=float(units.from_si(values["mass"], "mass")),
            linewidth=f(values["linewidth"]),
            detuning=f(values["atom_detuning"]),
            vacuum_rabi=f(values["vacuum_rabi"]),
            pump_rabi=f(values["pump_rabi"]),
            dipole_second_moment=values["dipole_second_moment"],
        )
        cavity = CavitySpec(
            linewidth=f(values["cavity_linewidth"]),
            detuning=f(values["cavity_detuning"]),
            wavenumber=float(values["wavenumber"] * units.length_unit),
        )
        return cls(atom=atom, cavity=cavity, n_atoms=values["n_atoms"], units=units)


def paper_params(
    cavity_detuning_over_kappa: float = -1.0,
    pump_over_threshold: float | None = None,
    pump_rabi: float | None = 21.0,
    n_atoms: int = 5,
    kappa: float = 0.5,
    atom_detuning: float = -500.0,
    shift_ratio: float = 0.05,
    dipole_second_moment: float = DEFAULT_DIPOLE_SECOND_MOMENT,
) -> PhysicalParams:
    """85Rb parameter set used for the cooling simulations.

    The vacuum Rabi frequency is fixed by ``shift_ratio`` = N U / Delta_c.  When
    ``pump_over_threshold`` is given it overrides ``pump_rabi`` and the pump is
    set relative to the self-organization threshold at this detuning.
    """
    from .field import threshold_pump

    units = rubidium85_units()
    delta_c = cavity_detuning_over_kappa * kappa
    g = vacuum_rabi_from_shift_ratio(shift_ratio, n_atoms, delta_c, atom_detuning)
    atom = AtomSpec(
        mass=units.dimensionless_mass,
        detuning=atom_detuning,
        vacuum_rabi=g,
        pump_rabi=0.0 if pump_rabi is None else pump_rabi,
        dipole_second_moment=dipole_second_moment,
    )
    params = PhysicalParams(atom=atom, cavity=CavitySpec(kappa, delta_c), n_atoms=n_atoms, units=units)
    if pump_over_threshold is not None:
        params = params.with_pump(pump_over_threshold * threshold_pump(params))
    return params


@dataclass(frozen=True)
class Diagnostic:
    name: str
    ratio: float
    threshold: float
    description: str

    @property
    def passed(self) -> bool:
        return bool(self.ratio < self.threshold)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "warn"


DEFAULT_REGIME_THRESHOLDS = {
    "recoil": 0.2,
    "adiabaticity": 0.2,
    "uniform_density": 0.2,
    "spontaneous_diffusion": 0.5,
    "dispersive": 0.1,
}


def validate_regime(
    params: PhysicalParams,
    momentum_width: float,
    n_atoms: int | None = None,
    thresholds: dict | None = None,
) -> list[Diagnostic]:
    """Check the semiclassical and adiabatic assumptions for a momentum width.

    Returns one :class:`Diagnostic` per condition; nothing is raised.
    """
    if not momentum_width > 0:
        raise ValueError("momentum width must be positive")
    th = dict(DEFAULT_REGIME_THRESHOLDS)
    th.update(thresholds or {})
    n = params.n_atoms if n_atoms is None else n_atoms
    c = params.couplings
    kappa, delta_c = params.kappa, params.delta_c
    k = params.cavity.wavenumber
    out = [
        Diagnostic("recoil", k / momentum_width, th["recoil"], "hbar k / Delta p"),
        Diagnostic(
            "adiabaticity",
            k * momentum_width / params.mass / abs(complex(kappa, delta_c)),
            th["adiabaticity"],
            "(k Delta p / m) / |kappa + i Delta_c|",
        ),
    ]
    if c.S == 0:
        uniform = 0.0
    else:
        uniform = math.sqrt(n) * abs(c.S) / (kappa * math.sqrt(kappa / abs(c.U)))
    out.append(Diagnostic("uniform_density", uniform, th["uniform_density"], "sqrt(N) S / (kappa sqrt(kappa/|U|))"))
    spont = 2.0 * params.atom.dipole_second_moment / c.cooperativity * (delta_c**2 + kappa**2) / kappa**2
    out.append(
        Diagnostic(
            "spontaneous_diffusion",
            spont,
            th["spontaneous_diffusion"],
            "spontaneous / cavity momentum diffusion, 2 u2 (Delta_c^2 + kappa^2) / (C kappa^2)",
        )
    )
    out.append(
        Diagnostic(
            "dispersive",
            0.5 * params.atom.linewidth / abs(params.atom.detuning),
            th["dispersive"],
            "(gamma/2) / |Delta_a|",
        )
    )
    return out
