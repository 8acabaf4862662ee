"""Horizontal/vertical tangent decomposition under the orthogonal action.

Directions along an equivalence class {(U^T A U, U^T B, C U)} form the
vertical space; its metric-orthogonal complement (the horizontal space) is
characterized by sk(2 xi_A A^-1 + B xi_B^T + C^T xi_C) = 0.  The orthogonal
projection onto the horizontal space is eta + (XA - AX, XB, -CX) where X is
the skew-symmetric solution of

    L1(X) + 2 L0(X) + beta = 0,
    L0(X) = A X A^-1 + A^-1 X A - 2X,
    L1(X) = (BB^T + C^T C) X + X (BB^T + C^T C),
    beta  = 2 sk(2 A^-1 a + b B^T + c^T C).

The equation is solved densely in the orthonormal basis
{(e_i e_j^T - e_j e_i^T)/sqrt(2), i < j} of the skew-symmetric matrices;
the solve also reports the residual and the condition number of the
restricted operator, which diagnoses failures of the joint
eigenvector/kernel assumption.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import HorizontalSolveError
from .manifold import SystemTriple, TangentTriple, TripleKind

__all__ = [
    "SkewSolveReport",
    "build_beta",
    "solve_skew",
    "horizontal_project",
    "horizontal_residual",
    "vertical_vector",
]

# Restricted operators with condition number above this are treated as
# singular (assumption violated) rather than merely ill-conditioned.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class SkewSolveReport:
    X: np.ndarray
    residual_norm: float
    operator_condition: float

    def __post_init__(self):
        x = np.asarray(self.X, dtype=float)
        x.flags.writeable = False
        object.__setattr__(self, "X", x)


def _gram_operand(theta: SystemTriple) -> np.ndarray:
    return theta.B @ theta.B.T + theta.C.T @ theta.C


def _apply_l(theta: SystemTriple, s: np.ndarray, a_inv: np.ndarray, x: np.ndarray):
    l0 = theta.A @ x @ a_inv + a_inv @ x @ theta.A - 2.0 * x
    l1 = s @ x + x @ s
    return l1 + 2.0 * l0


def build_beta(theta: SystemTriple, eta: TangentTriple) -> np.ndarray:
    """Right-hand side 2 sk(2 A^-1 a + b B^T + c^T C); exactly skew."""
    a_inv = linalg.spd_inv(theta.A)
    raw = 2.0 * a_inv @ eta.xi_A + eta.xi_B @ theta.B.T + eta.xi_C.T @ theta.C
    return 2.0 * linalg.sk(raw)


def solve_skew(theta: SystemTriple, beta: np.ndarray) -> SkewSolveReport:
    """Solve L1(X) + 2 L0(X) + beta = 0 for skew-symmetric X.

    Raises HorizontalSolveError when the restricted operator is singular or
    has condition number above CONDITION_LIMIT.
    """
    if theta.kind is not TripleKind.SPD:
        raise ValueError("horizontal projection is defined on SPD points")
    n = theta.n
    beta = np.asarray(beta, dtype=float)
    if n < 2:
        x = np.zeros((n, n))
        return SkewSolveReport(x, float(np.linalg.norm(beta)), 1.0)

    rows, cols = np.triu_indices(n, k=1)
    d = rows.size
    s = _gram_operand(theta)
    a_inv = linalg.spd_inv(theta.A)
    sqrt2 = np.sqrt(2.0)

    op = np.empty((d, d))
    for col in range(d):
        i, j = rows[col], cols[col]
        e = np.zeros((n, n))
        e[i, j] = 1.0 / sqrt2
        e[j, i] = -1.0 / sqrt2
        y = _apply_l(theta, s, a_inv, e)
        op[:, col] = sqrt2 * y[rows, cols]

    sv = np.linalg.svd(op, compute_uv=False)
    cond = float("inf") if sv[-1] == 0.0 else float(sv[0] / sv[-1])
    if cond > CONDITION_LIMIT:
        raise HorizontalSolveError(
            "restricted skew operator is numerically singular "
            f"(condition {cond:.3e}); a repeated eigenvalue of A shares a "
            "kernel direction with B^T and C at this point",
            condition=cond,
        )

    coeff = np.linalg.solve(op, -sqrt2 * beta[rows, cols])
    x = np.zeros((n, n))
    x[rows, cols] = coeff / sqrt2
    x -= x.T
    residual = float(np.linalg.norm(_apply_l(theta, s, a_inv, x) + beta))
    return SkewSolveReport(x, residual, cond)


def horizontal_project(
    theta: SystemTriple, eta: TangentTriple, return_report: bool = False
):
    """Orthogonal projection of ``eta`` onto the horizontal space at ``theta``.

    Returns the projected tangent, or ``(tangent, SkewSolveReport)`` when
    ``return_report`` is set.
    """
    report = solve_skew(theta, build_beta(theta, eta))
    x = report.X
    out = TangentTriple(
        linalg.sym(eta.xi_A + x @ theta.A - theta.A @ x),
        eta.xi_B + x @ theta.B,
        eta.xi_C - theta.C @ x,
    )
    if return_report:
        return out, report
    return out


def horizontal_residual(theta: SystemTriple, xi: TangentTriple) -> float:
    """Frobenius norm of sk(2 xi_A A^-1 + B xi_B^T + C^T xi_C); zero iff
    ``xi`` is horizontal."""
    a_inv = linalg.spd_inv(theta.A)
    raw = 2.0 * xi.xi_A @ a_inv + theta.B @ xi.xi_B.T + theta.C.T @ xi.xi_C
    return float(np.linalg.norm(linalg.sk(raw)))


def vertical_vector(theta: SystemTriple, u_skew: np.ndarray) -> TangentTriple:
    """Vertical direction generated by a skew matrix:
    (-U'A + AU', -U'B, CU')."""
    u_skew = np.asarray(u_skew, dtype=float)
    return TangentTriple(
        linalg.sym(theta.A @ u_skew - u_skew @ theta.A),
        -u_skew @ theta.B,
        theta.C @ u_skew,
    )
