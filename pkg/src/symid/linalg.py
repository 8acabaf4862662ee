"""Shared dense linear algebra for symmetric matrices.

Everything here goes through ``numpy.linalg.eigh``: all matrix functions
used by the package (sqrt, exp, log, the discretization phi-function) are
applied to symmetric matrices only, so the eigendecomposition route is both
exact and stable.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "sym",
    "sk",
    "sym_apply",
    "spd_sqrt",
    "spd_inv",
    "spd_inv_sqrt",
    "sym_exp",
    "spd_log",
    "is_spd",
    "phi1",
    "frobenius",
]

# Scale-aware positive-definiteness threshold: min eigenvalue must exceed
# SPD_RTOL * max(1, max eigenvalue).
SPD_RTOL = 1e-12


def sym(x: np.ndarray) -> np.ndarray:
    """Symmetric part (X + X^T)/2. Exact: the result equals its transpose."""
    return 0.5 * (x + x.T)


def sk(x: np.ndarray) -> np.ndarray:
    """Skew-symmetric part (X - X^T)/2."""
    return 0.5 * (x - x.T)


def frobenius(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def sym_apply(a: np.ndarray, fun) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix via eigendecomposition."""
    w, v = np.linalg.eigh(a)
    return sym(v @ (fun(w)[:, None] * v.T))


def spd_sqrt(a: np.ndarray) -> np.ndarray:
    return sym_apply(a, np.sqrt)


def spd_inv(a: np.ndarray) -> np.ndarray:
    return sym_apply(a, lambda w: 1.0 / w)


def spd_inv_sqrt(a: np.ndarray) -> np.ndarray:
    return sym_apply(a, lambda w: 1.0 / np.sqrt(w))


def sym_exp(a: np.ndarray) -> np.ndarray:
    return sym_apply(a, np.exp)


def spd_log(a: np.ndarray) -> np.ndarray:
    return sym_apply(a, np.log)


def is_spd(a: np.ndarray) -> bool:
    """Scale-aware positive definiteness of a (stored-symmetric) matrix."""
    if not np.array_equal(a, a.T):
        return False
    w = np.linalg.eigvalsh(a)
    return bool(w[0] > SPD_RTOL * max(1.0, w[-1]))


def phi1(w: np.ndarray, h: float) -> np.ndarray:
    """Elementwise (exp(w*h) - 1)/w with the w -> 0 limit h.

    This is the scalar spectrum of the integral of the matrix exponential
    over [0, h] for a symmetric generator.
    """
    w = np.asarray(w, dtype=float)
    out = np.full_like(w, h)
    nz = w != 0.0
    out[nz] = np.expm1(w[nz] * h) / w[nz]
    return out
