"""Factorizations B B^T = D of noise covariance matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "DiffusionFactorization",
    "arrow_factor",
    "eigen_factor",
    "factorize_diffusion",
    "field_model_diffusion",
]


@dataclass(frozen=True)
class DiffusionFactorization:
    """Eigen-factorization of a symmetric covariance with negative modes clipped.

    Attributes
    ----------
    covariance : ndarray
        The symmetric input matrix.
    factor : ndarray
        ``B`` with ``B @ B.T`` equal to the clipped covariance.
    clipped_mass : float
        Sum of the magnitudes of the negative eigenvalues that were dropped.
    """

    covariance: np.ndarray
    factor: np.ndarray
    clipped_mass: float

    @property
    def clipped_covariance(self) -> np.ndarray:
        return self.factor @ self.factor.T

    @property
    def clipped_fraction(self) -> float:
        tr = float(np.trace(self.covariance))
        return self.clipped_mass / tr if tr > 0 else 0.0


def factorize_diffusion(D) -> DiffusionFactorization:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("diffusion matrix must be square")
    scale = np.max(np.abs(D)) if D.size else 0.0
    if scale == 0.0:
        return DiffusionFactorization(D, np.zeros_like(D), 0.0)
    if np.max(np.abs(D - D.T)) > 1e-12 * scale:
        raise ValueError("diffusion matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (D + D.T))
    neg = w < 0
    clipped = float(-np.sum(w[neg]))
    w = np.where(neg, 0.0, w)
    return DiffusionFactorization(D, V * np.sqrt(w), clipped)


def field_model_diffusion(field_corr, atom_corr, atom_diag, kappa_eff):
    """Assemble the (N+2) x (N+2) covariance of (dA_r, dA_i, dP_1..dP_N).

    ``field_corr`` is ``(alpha_r, alpha_i)``, ``atom_corr`` the vector ``b_j`` and
    ``atom_diag`` the vector ``c_j``.
    """
    ar, ai = field_corr
    b = np.asarray(atom_corr, dtype=float)
    c = np.asarray(atom_diag, dtype=float)
    n = b.size
    D = np.zeros((n + 2, n + 2))
    D[0, 0] = D[1, 1] = 0.5 * kappa_eff
    D[0, 2:] = D[2:, 0] = -b * ai
    D[1, 2:] = D[2:, 1] = b * ar
    D[2:, 2:] = np.diag(c)
    return D


@njit(cache=True)
def arrow_factor(a, b, ar, ai, c, out):
    """Factor the arrow-shaped field-model covariance in O(N^2).

    Writes ``B`` into ``out`` (shape ``(N+2, N+2)``) and returns True.  Returns
    False, leaving ``out`` unspecified, when the matrix is not positive
    semidefinite or the structured route does not apply; the caller then falls
    back to eigenvalue clipping.

    With ``M_j = b_j (-ai, ar)`` the Schur complement of the field block is
    ``diag(c) - w w^T`` with ``w = b |alpha| / sqrt(a)``.  Its square root is
    ``diag(sqrt(c)) (I - beta u_hat u_hat^T)`` where ``u = w / sqrt(c)`` and
    ``beta = 1 - sqrt(1 - |u|^2)``.
    """
    n = b.shape[0]
    out[:, :] = 0.0
    if a <= 0.0:
        return False
    sa = math.sqrt(a)
    amp = math.sqrt(ar * ar + ai * ai)
    out[0, 0] = sa
    out[1, 1] = sa
    u2 = 0.0
    for j in range(n):
        if c[j] < 0.0 or (c[j] == 0.0 and b[j] != 0.0 and amp != 0.0):
            return False
        out[2 + j, 0] = -b[j] * ai / sa
        out[2 + j, 1] = b[j] * ar / sa
        if c[j] > 0.0:
            uj = b[j] * amp / (sa * math.sqrt(c[j]))
            u2 += uj * uj
    if u2 >= 1.0:
        return False
    shrink = 1.0 - math.sqrt(1.0 - u2)
    for j in range(n):
        if c[j] == 0.0:
            continue
        sj = math.sqrt(c[j])
        out[2 + j, 2 + j] = sj
        if u2 > 0.0:
            uj = b[j] * amp / (sa * sj)
            for l in range(n):
                if c[l] == 0.0:
                    continue
                ul = b[l] * amp / (sa * math.sqrt(c[l]))
                out[2 + j, 2 + l] -= shrink * sj * uj * ul / u2
    return True


@njit(cache=True)
def eigen_factor(D, out):
    """Clipped eigen-factorization inside compiled kernels; returns clipped mass."""
    w, V = np.linalg.eigh(D)
    clipped = 0.0
    n = D.shape[0]
    for k in range(n):
        if w[k] < 0.0:
            clipped -= w[k]
            w[k] = 0.0
    for i in range(n):
        for k in range(n):
            out[i, k] = V[i, k] * math.sqrt(w[k])
    return clipped
