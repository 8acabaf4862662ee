"""Geometry of the search space for the identified models.

A model point is a triple (A, B, C) where A is constrained to be symmetric
positive definite (kind SPD) or diagonal with positive entries (kind
DIAG_POS) while B and C live in flat Euclidean factors.  The A-factor
carries the affine-invariant metric tr(A^-1 xi A^-1 zeta); the Euclidean
factors carry the Frobenius inner product.  All maps (exponential,
parallel transport, gradient conversion, orthogonal group action) are exact
closed forms computed by symmetric eigendecomposition.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import NotPositiveDefiniteError

__all__ = [
    "TripleKind",
    "SystemTriple",
    "TangentTriple",
    "OrthogonalMatrix",
    "metric",
    "norm",
    "exp_map",
    "parallel_transport",
    "egrad_to_rgrad",
    "group_action",
    "tangent_action",
    "random_triple",
    "random_tangent",
]

# Construction rejects A-blocks whose asymmetry exceeds this relative level;
# smaller defects are folded away exactly by symmetrization.
_ASYM_RTOL = 1e-8


class TripleKind(enum.Enum):
    SPD = "spd"
    DIAG_POS = "diag_pos"


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float).copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SystemTriple:
    """Model point (A, B, C); immutable after construction.

    A is stored as a full matrix, exactly symmetric for kind SPD and exactly
    diagonal for kind DIAG_POS, and is validated to be positive definite with
    a scale-aware threshold.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    kind: TripleKind = TripleKind.SPD

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n or C.shape[1] != n:
            raise ValueError(
                f"inconsistent shapes: A {A.shape}, B {B.shape}, C {C.shape}"
            )
        if not np.isfinite(A).all():
            raise NotPositiveDefiniteError("A has non-finite entries")
        scale = 1.0 + float(np.abs(A).max(initial=0.0))
        if self.kind is TripleKind.SPD:
            if np.abs(A - A.T).max(initial=0.0) > _ASYM_RTOL * scale:
                raise ValueError("A-block is not symmetric")
            A = linalg.sym(A)
            w = np.linalg.eigvalsh(A)
            if not w[0] > linalg.SPD_RTOL * max(1.0, w[-1]):
                raise NotPositiveDefiniteError(
                    f"A is not positive definite (min eigenvalue {w[0]:.3e})"
                )
        else:
            off = A - np.diag(np.diag(A))
            if np.abs(off).max(initial=0.0) > _ASYM_RTOL * scale:
                raise ValueError("A-block is not diagonal")
            A = np.diag(np.diag(A))
            d = np.diag(A)
            if not d.min(initial=np.inf) > linalg.SPD_RTOL * max(1.0, d.max(initial=0.0)):
                raise NotPositiveDefiniteError("diagonal of A is not positive")
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "B", _freeze(B))
        object.__setattr__(self, "C", _freeze(C))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class TangentTriple:
    """Tangent vector (xi_A, xi_B, xi_C) at a model point.

    xi_A is symmetric at SPD points and diagonal at DIAG_POS points; the
    factories below enforce this. Supports +, -, and scalar *.
    """

    xi_A: np.ndarray
    xi_B: np.ndarray
    xi_C: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi_A", _freeze(self.xi_A))
        object.__setattr__(self, "xi_B", _freeze(np.atleast_2d(self.xi_B)))
        object.__setattr__(self, "xi_C", _freeze(np.atleast_2d(self.xi_C)))

    def __add__(self, other: "TangentTriple") -> "TangentTriple":
        return TangentTriple(
            self.xi_A + other.xi_A, self.xi_B + other.xi_B, self.xi_C + other.xi_C
        )

    def __sub__(self, other: "TangentTriple") -> "TangentTriple":
        return TangentTriple(
            self.xi_A - other.xi_A, self.xi_B - other.xi_B, self.xi_C - other.xi_C
        )

    def __mul__(self, s: float) -> "TangentTriple":
        return TangentTriple(s * self.xi_A, s * self.xi_B, s * self.xi_C)

    __rmul__ = __mul__

    def __neg__(self) -> "TangentTriple":
        return self * -1.0

    @classmethod
    def zero(cls, theta: SystemTriple) -> "TangentTriple":
        return cls(
            np.zeros((theta.n, theta.n)),
            np.zeros((theta.n, theta.m)),
            np.zeros((theta.p, theta.n)),
        )

    @classmethod
    def at(cls, theta: SystemTriple, xi_A, xi_B, xi_C) -> "TangentTriple":
        """Build a valid tangent at ``theta``: symmetrizes (SPD) or extracts
        the diagonal (DIAG_POS) of the A-component."""
        xi_A = np.asarray(xi_A, dtype=float)
        if theta.kind is TripleKind.SPD:
            xi_A = linalg.sym(xi_A)
        else:
            xi_A = np.diag(np.diag(xi_A))
        return cls(xi_A, xi_B, xi_C)


@dataclass(frozen=True)
class OrthogonalMatrix:
    """An n x n orthogonal matrix, validated on construction."""

    U: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        n = U.shape[0]
        if U.shape != (n, n):
            raise ValueError("U must be square")
        if np.linalg.norm(U.T @ U - np.eye(n)) > 1e-12:
            raise ValueError("U is not orthogonal to 1e-12")
        object.__setattr__(self, "U", _freeze(U))

    @classmethod
    def random(cls, rng: np.random.Generator, n: int) -> "OrthogonalMatrix":
        q, r = np.linalg.qr(rng.standard_normal((n, n)))
        # Fix signs so the distribution is Haar and the result deterministic.
        return cls(q * np.sign(np.diag(r)))


def metric(theta: SystemTriple, xi: TangentTriple, zeta: TangentTriple) -> float:
    """Riemannian inner product at ``theta``:

    tr(A^-1 xi_A A^-1 zeta_A) + tr(xi_B^T zeta_B) + tr(xi_C^T zeta_C).
    """
    if theta.kind is TripleKind.DIAG_POS:
        d = np.diag(theta.A)
        a_part = float(np.sum(np.diag(xi.xi_A) * np.diag(zeta.xi_A) / d**2))
    else:
        ai = linalg.spd_inv(theta.A)
        a_part = float(np.trace(ai @ xi.xi_A @ ai @ zeta.xi_A))
    return (
        a_part
        + float(np.sum(xi.xi_B * zeta.xi_B))
        + float(np.sum(xi.xi_C * zeta.xi_C))
    )


def norm(theta: SystemTriple, xi: TangentTriple) -> float:
    """Metric norm of a tangent; overflow-safe for huge components."""
    scale = max(
        float(np.abs(xi.xi_A).max(initial=0.0)),
        float(np.abs(xi.xi_B).max(initial=0.0)),
        float(np.abs(xi.xi_C).max(initial=0.0)),
    )
    if scale == 0.0 or not np.isfinite(scale):
        return scale
    unit = xi * (1.0 / scale)
    return scale * float(np.sqrt(max(metric(theta, unit, unit), 0.0)))


def exp_map(theta: SystemTriple, xi: TangentTriple) -> SystemTriple:
    """Geodesic exponential: follow the geodesic from ``theta`` along ``xi``.

    A-factor: A^{1/2} exp(A^{-1/2} xi_A A^{-1/2}) A^{1/2} (the symmetric form
    guarantees an exactly symmetric result); Euclidean factors translate.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        if theta.kind is TripleKind.DIAG_POS:
            d = np.diag(theta.A)
            a_new = np.diag(d * np.exp(np.diag(xi.xi_A) / d))
        else:
            rt = linalg.spd_sqrt(theta.A)
            irt = linalg.spd_inv_sqrt(theta.A)
            a_new = linalg.sym(rt @ linalg.sym_exp(irt @ xi.xi_A @ irt) @ rt)
    return SystemTriple(a_new, theta.B + xi.xi_B, theta.C + xi.xi_C, theta.kind)


def parallel_transport(
    theta1: SystemTriple, theta2: SystemTriple, xi: TangentTriple
) -> TangentTriple:
    """Parallel transport of ``xi`` along the geodesic from theta1 to theta2.

    xi_A maps to E xi_A E^T with E = (A2 A1^-1)^{1/2}; the Euclidean
    components are unchanged.  E is evaluated through the congruence
    E = A1^{1/2} (A1^{-1/2} A2 A1^{-1/2})^{1/2} A1^{-1/2}, which only takes
    square roots of symmetric positive definite matrices.
    """
    if theta1.kind is not theta2.kind:
        raise ValueError("transport requires points of the same kind")
    if theta1.kind is TripleKind.DIAG_POS:
        e = np.sqrt(np.diag(theta2.A) / np.diag(theta1.A))
        xi_a = np.diag(np.diag(xi.xi_A) * e * e)
    else:
        rt = linalg.spd_sqrt(theta1.A)
        irt = linalg.spd_inv_sqrt(theta1.A)
        mid = linalg.spd_sqrt(irt @ theta2.A @ irt)
        e = rt @ mid @ irt
        xi_a = linalg.sym(e @ xi.xi_A @ e.T)
    return TangentTriple(xi_a, xi.xi_B, xi.xi_C)


def egrad_to_rgrad(
    theta: SystemTriple, g_A: np.ndarray, g_B: np.ndarray, g_C: np.ndarray
) -> TangentTriple:
    """Convert a Euclidean gradient into the Riemannian gradient at ``theta``.

    SPD kind: (A sym(G_A) A, G_B, G_C); DIAG_POS kind: (A^2 diag(G_A), G_B,
    G_C). The result is the unique tangent satisfying
    metric(theta, grad, xi) = Df(theta)[xi] for all tangents xi.
    """
    g_A = np.asarray(g_A, dtype=float)
    if theta.kind is TripleKind.DIAG_POS:
        d = np.diag(theta.A)
        xi_a = np.diag(d * d * np.diag(g_A))
    else:
        xi_a = linalg.sym(theta.A @ linalg.sym(g_A) @ theta.A)
    return TangentTriple(xi_a, np.array(g_B, dtype=float), np.array(g_C, dtype=float))


def group_action(u: OrthogonalMatrix, theta: SystemTriple) -> SystemTriple:
    """Orthogonal change of state coordinates: (U^T A U, U^T B, C U)."""
    if theta.kind is not TripleKind.SPD:
        raise ValueError("group action is defined on SPD points")
    U = u.U
    return SystemTriple(linalg.sym(U.T @ theta.A @ U), U.T @ theta.B, theta.C @ U)


def tangent_action(
    u: OrthogonalMatrix, theta: SystemTriple, xi: TangentTriple
) -> TangentTriple:
    """Differential of the group action: (U^T xi_A U, U^T xi_B, xi_C U)."""
    U = u.U
    return TangentTriple(linalg.sym(U.T @ xi.xi_A @ U), U.T @ xi.xi_B, xi.xi_C @ U)


def random_triple(
    rng: np.random.Generator,
    n: int,
    m: int,
    p: int,
    kind: TripleKind = TripleKind.SPD,
    spread: float = 1.0,
) -> SystemTriple:
    """Random model point; the A-block has eigenvalues roughly in e^{±spread}."""
    if kind is TripleKind.DIAG_POS:
        a = np.diag(np.exp(spread * rng.standard_normal(n)))
    else:
        a = linalg.sym_exp(
            linalg.sym(spread * rng.standard_normal((n, n)) / np.sqrt(n))
        )
    return SystemTriple(a, rng.standard_normal((n, m)), rng.standard_normal((p, n)), kind)


def random_tangent(
    rng: np.random.Generator, theta: SystemTriple, scale: float = 1.0
) -> TangentTriple:
    return TangentTriple.at(
        theta,
        scale * rng.standard_normal((theta.n, theta.n)),
        scale * rng.standard_normal((theta.n, theta.m)),
        scale * rng.standard_normal((theta.p, theta.n)),
    )
