"""Initial-point construction: MOESP subspace estimate plus eigenvalue repair.

The raw estimate comes from the ordinary MOESP scheme: LQ-factorize stacked
input/output block-Hankel matrices, SVD the block of the outputs orthogonal
to the inputs to get the extended observability matrix, read C off its first
block row, get A from shift invariance, and fit B (with no feedthrough, zero
initial state) by linear least squares.  The raw A is then symmetrized and
any non-positive eigenvalue is replaced by 0.01 * rand, yielding a valid SPD
(or, for the diagonal search space, positive-diagonal) starting point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import SubspaceOrderError
from .manifold import SystemTriple, TripleKind
from .model import IODataset

__all__ = [
    "SubspaceConfig",
    "block_hankel",
    "subspace_estimate",
    "repair_spd",
    "repair_diag",
    "initial_point",
]


@dataclass(frozen=True)
class SubspaceConfig:
    """Hankel depth (default 2n block rows) and observability weighting.

    ``weighting`` picks the basis of the extended observability estimate:
    "plain" reads it off the left singular vectors directly (the original
    shift-invariance scheme); "balanced" scales the columns by the square
    roots of the singular values.  Both are textbook choices.  The balanced
    basis is markedly more accurate after the symmetrization repair (for
    reciprocal networks it is nearly invariant under it), while the plain
    basis reproduces the published initializer quality of this benchmark.
    """

    block_rows: int | None = None
    weighting: str = "plain"

    def __post_init__(self):
        if self.weighting not in ("plain", "balanced"):
            raise ValueError("weighting must be 'plain' or 'balanced'")

    def resolved_rows(self, n: int) -> int:
        s = 2 * n if self.block_rows is None else self.block_rows
        if s < n + 1:
            raise ValueError(f"block_rows must be at least n+1 = {n + 1}")
        return s


def block_hankel(series: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Stack ``rows`` shifted copies of a (T, q) series into (rows*q, cols)."""
    T, q = series.shape
    if rows + cols - 1 > T:
        raise ValueError("not enough samples for the requested Hankel shape")
    out = np.empty((rows * q, cols))
    for r in range(rows):
        out[r * q : (r + 1) * q] = series[r : r + cols].T
    return out


def subspace_estimate(
    data: IODataset, n: int, cfg: SubspaceConfig | None = None
):
    """Raw (A, B, C) estimate of order ``n``; A is generally not symmetric.

    Raises SubspaceOrderError when the numerical rank of the projected
    output block is below ``n``, and ValueError when the record is too
    short for the requested Hankel depth.
    """
    cfg = cfg or SubspaceConfig()
    s = cfg.resolved_rows(n)
    K = data.K
    m, p = data.m, data.p
    if K + 1 < 2 * s + n:
        raise ValueError(
            f"need K+1 >= 2*block_rows + n = {2 * s + n}, got {K + 1}"
        )
    j = K + 2 - s
    if j < s * (m + p):
        raise ValueError("record too short for a full-rank LQ factor")

    uh = block_hankel(data.u, s, j)
    yh = block_hankel(data.y, s, j)
    w = np.vstack([uh, yh])
    r = np.linalg.qr(w.T, mode="r")
    ell = r.T  # lower-triangular LQ factor of [U; Y]
    l22 = ell[s * m :, s * m :]

    uu, sv, _ = np.linalg.svd(l22)
    if sv[0] <= 0.0 or sv[n - 1] <= 1e-10 * sv[0]:
        raise SubspaceOrderError(
            f"projected output block has numerical rank < {n} "
            f"(singular values {sv[: min(n + 1, sv.size)]})"
        )
    gamma = uu[:, :n]
    if cfg.weighting == "balanced":
        gamma = gamma * np.sqrt(sv[:n])

    C = gamma[:p].copy()
    A, *_ = np.linalg.lstsq(gamma[: (s - 1) * p], gamma[p:], rcond=None)

    # B from least squares on the zero-initial-state response: the state is
    # linear in vec(B) through Psi_{k+1} = A Psi_k + kron(u_k^T, I).
    eye = np.eye(n)
    psi = np.zeros((n, n * m))
    rows = np.empty((K, p, n * m))
    for k in range(K):
        psi = A @ psi + np.kron(data.u[k][None, :], eye)
        rows[k] = C @ psi
    vec_b, *_ = np.linalg.lstsq(
        rows.reshape(K * p, n * m), data.y[1:].ravel(), rcond=None
    )
    B = vec_b.reshape((n, m), order="F")
    return A, B, C


def _repair_eigenvalues(A_raw: np.ndarray, rng: np.random.Generator):
    """Symmetrize, then replace each non-positive eigenvalue by 0.01*rand."""
    a_sym = linalg.sym(np.asarray(A_raw, dtype=float))
    w, v = np.linalg.eigh(a_sym)
    repaired = False
    w = w.copy()
    for i in range(w.size):
        if w[i] <= 0.0:
            w[i] = 0.01 * rng.uniform()
            repaired = True
    return a_sym, w, v, repaired


def repair_spd(A, B, C, rng: np.random.Generator) -> SystemTriple:
    """SPD starting point: sym(A) with non-positive eigenvalues redrawn.

    A triple whose A already satisfies the SPD invariant passes through
    unchanged; B and C are never touched.
    """
    a_sym, w, v, repaired = _repair_eigenvalues(A, rng)
    a_new = linalg.sym(v @ (w[:, None] * v.T)) if repaired else a_sym
    return SystemTriple(a_new, np.array(B, dtype=float), np.array(C, dtype=float))


def repair_diag(A, B, C, rng: np.random.Generator) -> SystemTriple:
    """Positive-diagonal starting point for the diagonal search space.

    After the same symmetrization/eigenvalue repair, rotates the triple into
    the eigenbasis: (diag(w), V^T B, C V).  Eigenvalues are in ascending
    order, making the construction deterministic.
    """
    _, w, v, _ = _repair_eigenvalues(A, rng)
    return SystemTriple(
        np.diag(w), v.T @ np.asarray(B, dtype=float),
        np.asarray(C, dtype=float) @ v, TripleKind.DIAG_POS
    )


def initial_point(
    data: IODataset,
    n: int,
    rng: np.random.Generator,
    kind: TripleKind = TripleKind.SPD,
    cfg: SubspaceConfig | None = None,
) -> SystemTriple:
    """Subspace estimate followed by the repair matching ``kind``."""
    A, B, C = subspace_estimate(data, n, cfg)
    if kind is TripleKind.DIAG_POS:
        return repair_diag(A, B, C, rng)
    return repair_spd(A, B, C, rng)
