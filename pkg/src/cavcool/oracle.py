"""Truncated-Fock evaluation of the general Fokker-Planck coefficients.

The cavity mode is represented in the photon-number basis ``|0>..|n_max>``
with the atoms pinned at fixed positions.  Superoperators act on
column-stacked density matrices, ``vec(A X B) = (B^T kron A) vec(X)``.

Time integrals of the zeroth-order Liouvillian L0 applied to a traceless
operator Y are evaluated exactly in the truncated space:

    int_0^inf exp(L0 t) Y dt   = -M^{-1} Y
    int_0^inf t exp(L0 t) Y dt =  M^{-2} Y

with the deflated generator ``M = L0 - |sigma_s>><<1|``.  On traceless
operators M coincides with L0 and it is invertible, so no pseudo-inverse
thresholding is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .params import PhysicalParams

__all__ = [
    "OracleCoefficients",
    "OracleError",
    "SteadyFieldState",
    "TruncatedLiouvillian",
    "build_liouvillian",
    "coefficient_integrals",
    "force_operators",
    "oracle_coefficients",
    "steady_state",
]


class OracleError(RuntimeError):
    pass


def _ladder(n_max: int):
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)
    return a, a.conj().T


def _vec(X):
    return np.asarray(X).reshape(-1, order="F")


def _unvec(v, dim):
    return np.asarray(v).reshape(dim, dim, order="F")


def _spre(A):
    return np.kron(np.eye(A.shape[0]), A)


def _spost(A):
    return np.kron(A.T, np.eye(A.shape[0]))


def _dissipator(c):
    """Superoperator of 2 c X c^+ - c^+ c X - X c^+ c."""
    cdc = c.conj().T @ c
    return 2.0 * np.kron(c.conj(), c) - _spre(cdc) - _spost(cdc)


@dataclass(frozen=True)
class TruncatedLiouvillian:
    n_max: int
    matrix: np.ndarray
    positions: np.ndarray
    spontaneous: bool

    @property
    def dim(self) -> int:
        return self.n_max + 1

    def apply(self, X):
        return _unvec(self.matrix @ _vec(X), self.dim)


def build_liouvillian(positions, params: PhysicalParams, n_max: int = 2, spontaneous: bool = True) -> TruncatedLiouvillian:
    """Zeroth-order field Liouvillian for atoms pinned at ``positions``.

    Contains the atom-shifted cavity detuning, the coherent pump through the
    atoms, cavity decay at rate kappa and, with ``spontaneous=True``, the
    photon loss and dissipative pump from spontaneous scattering.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    x = np.asarray(positions, dtype=float)
    a, ad = _ladder(n_max)
    n_op = ad @ a
    cp = params.couplings
    cos = np.cos(params.cavity.wavenumber * x)
    delta_eff = params.delta_c - cp.U * np.sum(cos**2)
    # H/hbar = -Delta_c' a^+a + S sum cos (a + a^+)
    H = -delta_eff * n_op + cp.S * np.sum(cos) * (a + ad)
    L = -1j * (_spre(H) - _spost(H)) + params.kappa * _dissipator(a)
    if spontaneous:
        Gamma = cp.Gamma
        drive = Gamma * cp.s * np.sum(cos) * (a - ad)
        L = L + (_spre(drive) - _spost(drive)) + Gamma * np.sum(cos**2) * _dissipator(a)
    return TruncatedLiouvillian(n_max=n_max, matrix=L, positions=x, spontaneous=spontaneous)


@dataclass(frozen=True)
class SteadyFieldState:
    rho: np.ndarray
    residual: float

    def expect(self, op) -> complex:
        return complex(np.trace(self.rho @ op))


def steady_state(L: TruncatedLiouvillian) -> SteadyFieldState:
    dim = L.dim
    M = L.matrix
    sv = sla.svdvals(M)
    scale = max(sv[0], 1.0)
    if sv[-2] < 1e-10 * scale:
        raise OracleError(f"degenerate null space: two singular values below {1e-10 * scale:.3e}")
    # Replace the null-space condition by the trace constraint.
    A = np.vstack([M, _vec(np.eye(dim))[None, :]])
    b = np.zeros(dim * dim + 1, dtype=complex)
    b[-1] = 1.0
    v, *_ = np.linalg.lstsq(A, b, rcond=None)
    rho = _unvec(v, dim)
    rho = 0.5 * (rho + rho.conj().T)
    w, V = np.linalg.eigh(rho)
    if w.min() < -1e-10:
        raise OracleError(f"steady state not positive: min eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    rho = (V * w) @ V.conj().T
    rho /= np.trace(rho).real
    residual = float(np.linalg.norm(M @ _vec(rho)))
    return SteadyFieldState(rho=rho, residual=residual)


def force_operators(positions, params: PhysicalParams, n_max: int = 2, spontaneous: bool = True) -> list[np.ndarray]:
    """Hermitian force operators F_j on the truncated cavity space."""
    x = np.asarray(positions, dtype=float)
    a, ad = _ladder(n_max)
    cp = params.couplings
    k = params.cavity.wavenumber
    out = []
    for xj in x:
        F = k * cp.S * np.sin(k * xj) * (a + ad) + k * cp.U * np.sin(2 * k * xj) * (ad @ a)
        if spontaneous:
            F = F - 1j * (ad - a) * k * cp.Gamma * cp.s * np.sin(k * xj)
        out.append(F)
    return out


@dataclass(frozen=True)
class OracleCoefficients:
    """Numerically exact (within truncation) Fokker-Planck coefficients.

    ``diffusion`` is the symmetric part of the diffusion integral; only the
    symmetric part enters the Fokker-Planck equation.
    """

    phi: np.ndarray
    friction: np.ndarray
    diffusion: np.ndarray
    cross: np.ndarray
    photon_number: float
    alpha: complex
    condition_number: float


def coefficient_integrals(
    L: TruncatedLiouvillian,
    forces: list[np.ndarray],
    state: SteadyFieldState,
    params: PhysicalParams,
) -> OracleCoefficients:
    dim = L.dim
    sigma = state.rho
    ones = _vec(np.eye(dim))
    M = L.matrix - np.outer(_vec(sigma), ones)
    lu = sla.lu_factor(M)
    cond = float(np.linalg.cond(M))

    def solve(Y):
        y = _vec(Y)
        sol = sla.lu_solve(lu, y)
        res = np.linalg.norm(M @ sol - y)
        if res > 1e-8 * max(1.0, np.linalg.norm(y)):
            raise OracleError(f"linear solve residual {res:.3e} (condition number {cond:.3e})")
        return _unvec(sol, dim)

    def integral(Y):
        return -solve(Y)

    def tau_integral(Y):
        return solve(solve(Y))

    a, ad = _ladder(L.n_max)
    n_op = ad @ a
    m = params.mass
    k = params.cavity.wavenumber
    cp = params.couplings
    x = L.positions
    n = len(forces)
    phi = np.array([np.trace(sigma @ F).real for F in forces])

    friction = np.zeros((n, n))
    diffusion = np.zeros((n, n))
    cross = np.zeros((n, n))
    for ell, Fl in enumerate(forces):
        comm = Fl @ sigma - sigma @ Fl
        sym = 0.5 * (sigma @ Fl + Fl @ sigma) - phi[ell] * sigma
        I_comm2 = tau_integral(1j / m * comm)
        I_sym = integral(sym)
        I_sym2 = tau_integral(sym) / m
        for j, Fj in enumerate(forces):
            friction[j, ell] = np.trace(Fj @ I_comm2).real
            diffusion[j, ell] = np.trace(Fj @ I_sym).real
            cross[j, ell] = np.trace(Fj @ I_sym2).real

    if L.spontaneous:
        G = cp.Gamma
        u2 = params.atom.dipole_second_moment
        jump = n_op @ sigma + sigma @ n_op - 2.0 * a @ sigma @ ad
        ncomm = n_op @ sigma - sigma @ n_op
        J2 = tau_integral(jump)
        C1 = integral(ncomm)
        C2 = tau_integral(ncomm)
        n_mean = np.trace(sigma @ n_op).real
        x_mean = np.trace(sigma @ (a + ad)).real
        for ell in range(n):
            s2l = np.sin(2 * k * x[ell])
            for j, Fj in enumerate(forces):
                friction[j, ell] += G * k / m * s2l * np.trace(Fj @ J2).real
                diffusion[j, ell] += (-G * k * 0.5j * s2l * np.trace(Fj @ C1)).real
                cross[j, ell] += (G * (-1j * k) / (2 * m) * s2l * np.trace(Fj @ C2)).real
        sin2 = np.sin(k * x) ** 2
        cos1 = np.cos(k * x)
        diag = k * k * G * (n_mean * (sin2 + u2 * cos1**2) + cp.s * u2 * (x_mean * cos1 + cp.s))
        diffusion += np.diag(diag)

    diffusion = 0.5 * (diffusion + diffusion.T)
    return OracleCoefficients(
        phi=phi,
        friction=friction,
        diffusion=diffusion,
        cross=cross,
        photon_number=float(np.trace(sigma @ n_op).real),
        alpha=complex(np.trace(sigma @ a)),
        condition_number=cond,
    )


def oracle_coefficients(positions, params: PhysicalParams, n_max: int = 2, spontaneous: bool = True) -> OracleCoefficients:
    L = build_liouvillian(positions, params, n_max, spontaneous)
    state = steady_state(L)
    forces = force_operators(positions, params, n_max, spontaneous)
    return coefficient_integrals(L, forces, state, params)
