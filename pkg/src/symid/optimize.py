"""Riemannian conjugate-gradient identification and baselines.

Variants share one loop: step along the current direction with an Armijo
backtracking search on the geodesic, then build the next direction from the
new gradient, the Dai-Yuan parameter, and a transported copy of the old
direction.  The transport rule is what distinguishes them:

* CG1 and CG3 move the old direction by parallel transport (CG3 on the
  positive-diagonal space),
* CG2 projects it onto the horizontal space of the orthogonal-action
  quotient at the new iterate,
* HYBRID uses the CG1 rule for the first ``hybrid_switch`` iterations and
  the CG2 rule afterwards,
* SD discards the old direction entirely.

The conventional Gauss-Newton baseline operates on the flat parameter
vector (vec A; vec B; vec C) with no symmetry constraint; it is kept to
measure how far its iterates drift from the symmetric positive definite
set, not to compete.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import HorizontalSolveError, NotPositiveDefiniteError
from .manifold import (
    SystemTriple,
    TangentTriple,
    TripleKind,
    exp_map,
    metric,
    norm,
    parallel_transport,
)
from .model import GradientTriple, IODataset, euclid_gradient, objective
from .manifold import egrad_to_rgrad
from .quotient import horizontal_project

__all__ = [
    "VARIANTS",
    "ArmijoConfig",
    "OptConfig",
    "IterRecord",
    "OptTrace",
    "armijo_step",
    "dai_yuan_beta",
    "run",
    "run_gn_baseline",
]

VARIANTS = ("CG1", "CG2", "CG3", "SD", "HYBRID", "GN")


@dataclass(frozen=True)
class ArmijoConfig:
    """Backtracking line-search constants (sufficient decrease c1).

    ``polish`` rounds of quadratic-style refinement probe 0.5/0.75/1.25
    times the accepted step and keep any candidate with a lower objective
    that still satisfies the sufficient-decrease inequality; the accepted
    largest-backtracked step alone systematically overshoots the 1-D
    minimizer and stalls deep conjugate-gradient convergence.
    """

    c1: float = 1e-4
    shrink: float = 0.5
    t_init: float = 1.0
    max_backtracks: int = 50
    polish: int = 2

    def __post_init__(self):
        if not 0.0 < self.c1 < 1.0:
            raise ValueError("c1 must be in (0, 1)")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must be in (0, 1)")
        if self.t_init <= 0 or self.max_backtracks < 0:
            raise ValueError("t_init must be positive, max_backtracks >= 0")
        if self.polish < 0:
            raise ValueError("polish must be non-negative")


@dataclass(frozen=True)
class OptConfig:
    variant: str = "CG1"
    max_iters: int = 20
    armijo: ArmijoConfig = field(default_factory=ArmijoConfig)
    hybrid_switch: int = 15
    grad_tol: float = 1e-8
    beta_rule: str = "dai_yuan"  # "zero" reduces every CG variant to SD
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.variant == "HYBRID" and not 0 <= self.hybrid_switch < self.max_iters:
            raise ValueError("hybrid_switch must lie in [0, max_iters)")
        if self.beta_rule not in ("dai_yuan", "zero"):
            raise ValueError("beta_rule must be 'dai_yuan' or 'zero'")


@dataclass(frozen=True)
class IterRecord:
    iter: int
    f: float
    grad_norm: float
    step: float = float("nan")
    beta: float = float("nan")
    backtracks: int = 0
    projection_condition: float = float("nan")
    flags: tuple = ()
    # Gauss-Newton diagnostics (departure from the symmetric PD set).
    symmetry_defect: float = float("nan")
    eig_min_real: float = float("nan")
    eig_max_imag: float = float("nan")


@dataclass
class OptTrace:
    variant: str
    records: list
    theta_final: SystemTriple | None
    reason: str
    gn_final: tuple | None = None
    iterates: list | None = None

    @property
    def f_history(self) -> np.ndarray:
        return np.array([r.f for r in self.records])

    @property
    def f_final(self) -> float:
        return self.records[-1].f

    def summary(self) -> dict:
        return {
            "variant": self.variant,
            "iterations": len(self.records) - 1,
            "f_init": self.records[0].f,
            "f_final": self.records[-1].f,
            "grad_norm_final": self.records[-1].grad_norm,
            "termination": self.reason,
        }

    def to_csv(self, path) -> None:
        cols = (
            "iter", "f", "grad_norm", "step", "beta", "backtracks",
            "projection_condition", "symmetry_defect", "flags",
        )
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for r in self.records:
                fh.write(
                    f"{r.iter},{r.f!r},{r.grad_norm!r},{r.step!r},{r.beta!r},"
                    f"{r.backtracks},{r.projection_condition!r},"
                    f"{r.symmetry_defect!r},{';'.join(r.flags)}\n"
                )

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def _rgrad(theta: SystemTriple, data: IODataset) -> TangentTriple:
    g = euclid_gradient(theta, data)
    return egrad_to_rgrad(theta, g.G_A, g.G_B, g.G_C)


def _normalized(theta: SystemTriple, eta: TangentTriple) -> TangentTriple:
    s = norm(theta, eta)
    if np.isfinite(s) and s > 0.0:
        return eta * (1.0 / s)
    return eta


def _try_step(theta: SystemTriple, eta: TangentTriple, t: float, data: IODataset):
    """Evaluate the candidate Exp_theta(t*eta); an overflowing exponential or
    a diverging simulation counts as f = inf rather than an exception."""
    try:
        cand = exp_map(theta, t * eta)
    except (NotPositiveDefiniteError, ValueError, np.linalg.LinAlgError):
        return None, float("inf")
    f, _ = objective(cand, data)
    return cand, f


def armijo_step(
    theta: SystemTriple,
    eta: TangentTriple,
    f0: float,
    slope: float,
    data: IODataset,
    cfg: ArmijoConfig,
    t_init: float | None = None,
):
    """Largest t in {t_init * shrink^j} satisfying the sufficient-decrease
    inequality f(Exp(t eta)) <= f0 + c1 t <grad, eta>.

    Returns (t, theta_new, f_new, backtracks, satisfied).  When the budget
    is exhausted the smallest trial is returned with satisfied = False; the
    caller decides whether plain decrease is enough to accept it.
    """
    t = cfg.t_init if t_init is None else t_init
    cand, f_t = _try_step(theta, eta, t, data)
    j = 0
    while f_t > f0 + cfg.c1 * t * slope:
        if j >= cfg.max_backtracks:
            return t, cand, f_t, j, False
        t *= cfg.shrink
        cand, f_t = _try_step(theta, eta, t, data)
        j += 1
    return t, cand, f_t, j, True


def _polish_step(theta, eta, slope, f0, t, theta_new, f_new, data, cfg):
    """Refine an accepted step: keep probing scaled steps while they lower
    the objective and still satisfy the Armijo inequality."""
    for _ in range(cfg.polish):
        best = (t, theta_new, f_new)
        for factor in (0.5, 0.75, 1.25):
            tt = factor * t
            cand, f_c = _try_step(theta, eta, tt, data)
            if cand is not None and f_c < best[2] and f_c <= f0 + cfg.c1 * tt * slope:
                best = (tt, cand, f_c)
        if best[0] == t:
            break
        t, theta_new, f_new = best
    return t, theta_new, f_new


def dai_yuan_beta(
    theta_next: SystemTriple,
    g_next: TangentTriple,
    transported: TangentTriple,
    theta: SystemTriple,
    g: TangentTriple,
    eta: TangentTriple,
) -> float:
    """Dai-Yuan parameter ||g+||^2 / (<g+, P(eta)>+ - <g, eta>), with every
    inner product taken at its own iterate.  A vanishing denominator resets
    the recursion (beta = 0, steepest descent restart)."""
    num = metric(theta_next, g_next, g_next)
    denom = metric(theta_next, g_next, transported) - metric(theta, g, eta)
    if abs(denom) < 1e-300:
        return 0.0
    return num / denom


def _transport_rule(variant: str, k: int, switch: int) -> str:
    if variant in ("CG1", "CG3"):
        return "parallel"
    if variant == "CG2":
        return "project"
    if variant == "HYBRID":
        return "parallel" if k < switch else "project"
    return "none"  # SD


def run(
    theta0: SystemTriple,
    data: IODataset,
    config: OptConfig,
    keep_iterates: bool = False,
) -> OptTrace:
    """Minimize the squared prediction error from ``theta0``.

    Every iterate stays on the search space by construction (the update is a
    geodesic step).  CG2 projection failures fall back to parallel transport
    for that iteration and are flagged in the trace.
    """
    if config.variant == "GN":
        return run_gn_baseline(theta0, data, config)
    want_kind = TripleKind.DIAG_POS if config.variant == "CG3" else TripleKind.SPD
    if theta0.kind is not want_kind:
        raise ValueError(
            f"variant {config.variant} needs a {want_kind.name} initial point"
        )

    theta = theta0
    f, _ = objective(theta, data)
    g = _rgrad(theta, data)
    gnorm = norm(theta, g)
    records = [IterRecord(0, f, gnorm)]
    iterates = [theta] if keep_iterates else None

    if gnorm <= config.grad_tol * max(1.0, f):
        return OptTrace(config.variant, records, theta, "stationary_start", iterates=iterates)

    # Directions are stored with unit metric norm: the CG recursion is
    # scale-covariant (the Dai-Yuan coefficient absorbs the factor), the
    # step then measures geodesic displacement, and nothing overflows even
    # when a pathological initial point has astronomically large gradients.
    eta = _normalized(theta, -1.0 * g)
    reason = "max_iters"
    t_prev = None
    for k in range(config.max_iters):
        flags = []
        slope = metric(theta, g, eta)
        if not slope < 0.0:
            eta = _normalized(theta, -1.0 * g)
            slope = metric(theta, g, eta)
            flags.append("direction_reset")

        # Warm-start the search near the previous accepted step (allowed to
        # regrow by 1/shrink^2 per iteration, capped by the configured cap).
        t_start = config.armijo.t_init
        if t_prev is not None:
            t_start = min(t_start, t_prev / config.armijo.shrink**2)
        t, theta_new, f_new, backtracks, ok = armijo_step(
            theta, eta, f, slope, data, config.armijo, t_init=t_start
        )
        if theta_new is None or (not ok and not f_new < f):
            records.append(
                IterRecord(k + 1, f, gnorm, step=t, backtracks=backtracks,
                           flags=tuple(flags + ["line_search_exhausted"]))
            )
            reason = "line_search_failed"
            break
        if not ok:
            flags.append("armijo_not_satisfied")
        t, theta_new, f_new = _polish_step(
            theta, eta, slope, f, t, theta_new, f_new, data, config.armijo
        )
        t_prev = t

        g_new = _rgrad(theta_new, data)
        gnorm_new = norm(theta_new, g_new)

        proj_cond = float("nan")
        rule = _transport_rule(config.variant, k, config.hybrid_switch)
        if rule == "none":
            eta_new = -1.0 * g_new
            beta = 0.0
        else:
            if rule == "project":
                try:
                    transported, report = horizontal_project(
                        theta_new, eta, return_report=True
                    )
                    proj_cond = report.operator_condition
                except HorizontalSolveError:
                    transported = parallel_transport(theta, theta_new, eta)
                    flags.append("projection_fallback")
            else:
                transported = parallel_transport(theta, theta_new, eta)
            if config.beta_rule == "zero":
                beta = 0.0
            else:
                beta = dai_yuan_beta(theta_new, g_new, transported, theta, g, eta)
            eta_new = -1.0 * g_new + beta * transported

        records.append(
            IterRecord(k + 1, f_new, gnorm_new, step=t, beta=beta,
                       backtracks=backtracks, projection_condition=proj_cond,
                       flags=tuple(flags))
        )
        theta, f, g, gnorm = theta_new, f_new, g_new, gnorm_new
        eta = _normalized(theta, eta_new)
        if keep_iterates:
            iterates.append(theta)
        if gnorm <= config.grad_tol * max(1.0, f):
            reason = "gradient_converged"
            break

    return OptTrace(config.variant, records, theta, reason, iterates=iterates)


# ---------------------------------------------------------------------------
# Conventional Gauss-Newton baseline on the vectorized parameter.


def _gn_unpack(thv: np.ndarray, n: int, m: int, p: int):
    a = thv[: n * n].reshape((n, n), order="F")
    b = thv[n * n : n * n + n * m].reshape((n, m), order="F")
    c = thv[n * n + n * m :].reshape((p, n), order="F")
    return a, b, c


def _gn_jacobian(a, b, c, x, u):
    """Jacobian of the stacked residual w.r.t. (vec A; vec B; vec C),
    built by one batched forward sensitivity recursion over all coordinate
    directions.  Shape (K*p, n(n+m+p))."""
    T, n = x.shape
    K = T - 1
    m = u.shape[1]
    p = c.shape[0]
    d_ab = n * n + n * m
    idx = np.arange(n)
    s = np.zeros((d_ab, n))
    out = np.empty((K, p, d_ab))
    at = a.T.copy()
    for k in range(1, T):
        s = s @ at
        sa = s[: n * n].reshape(n, n, n)
        sa[:, idx, idx] += x[k - 1][:, None]
        sb = s[n * n :].reshape(m, n, n)
        sb[:, idx, idx] += u[k - 1][:, None]
        out[k - 1] = (s @ c.T).T
    j_ab = -out
    j_c = -np.einsum("kj,ci->kcji", x[1:], np.eye(p)).reshape(K, p, n * p)
    return np.concatenate([j_ab, j_c], axis=2).reshape(K * p, d_ab + n * p)


_GN_BLOCKS = ("A", "B", "C")


def run_gn_baseline(
    theta0: SystemTriple,
    data: IODataset,
    config: OptConfig,
    blocks: tuple = _GN_BLOCKS,
) -> OptTrace:
    """Gauss-Newton on the flat parameter vector (no manifold constraint).

    Records, per iterate, the symmetry defect ||A - A^T||_F and eigenvalue
    diagnostics of the A-block to measure how the iterates leave the
    symmetric positive definite set.  Numerically rank-deficient normal
    equations get Levenberg damping mu = 1e-8 tr(J^T J)/dim (flagged);
    ``blocks`` restricts the update to a subset of (A, B, C).
    """
    n, m, p = theta0.n, theta0.m, theta0.p
    if data.m != m or data.p != p:
        raise ValueError("data dimensions do not match the initial point")
    for blk in blocks:
        if blk not in _GN_BLOCKS:
            raise ValueError(f"unknown block {blk!r}")
    sizes = {"A": n * n, "B": n * m, "C": p * n}
    offs = {"A": 0, "B": n * n, "C": n * n + n * m}
    mask = np.zeros(n * (n + m + p), dtype=bool)
    for blk in blocks:
        mask[offs[blk] : offs[blk] + sizes[blk]] = True

    thv = np.concatenate(
        [theta0.A.ravel(order="F"), theta0.B.ravel(order="F"), theta0.C.ravel(order="F")]
    )
    records = []
    reason = "max_iters"
    x0 = np.zeros(n)
    u = data.u
    for k in range(config.max_iters + 1):
        a, b, c = _gn_unpack(thv, n, m, p)
        x, yhat = kernels.simulate(
            np.ascontiguousarray(a), np.ascontiguousarray(b),
            np.ascontiguousarray(c), u, x0,
        )
        alpha = (data.y[1:] - yhat[1:]).ravel()
        f = float(alpha @ alpha)
        ev = np.linalg.eigvals(a)
        defect = float(np.linalg.norm(a - a.T))
        if not np.isfinite(f):
            records.append(
                IterRecord(k, float("inf"), float("nan"), flags=("diverged",),
                           symmetry_defect=defect)
            )
            reason = "diverged"
            break

        jac = _gn_jacobian(a, b, c, x, u)[:, mask]
        grad = 2.0 * jac.T @ alpha
        records.append(
            IterRecord(k, f, float(np.linalg.norm(grad)),
                       symmetry_defect=defect,
                       eig_min_real=float(ev.real.min()),
                       eig_max_imag=float(np.abs(ev.imag).max()))
        )
        if k == config.max_iters:
            break
        if f == 0.0:
            reason = "zero_residual"
            break

        jtj = jac.T @ jac
        w = np.linalg.eigvalsh(jtj)
        flags = ()
        if w[0] <= 1e-12 * max(w[-1], 0.0) or w[0] <= 0.0:
            mu = 1e-8 * float(np.trace(jtj)) / jtj.shape[0]
            jtj = jtj + mu * np.eye(jtj.shape[0])
            flags = ("damped",)
        delta = np.linalg.solve(jtj, jac.T @ alpha)
        thv = thv.copy()
        thv[mask] -= delta
        if flags:
            records[-1] = IterRecord(
                **{**records[-1].__dict__, "flags": records[-1].flags + flags}
            )

    a, b, c = _gn_unpack(thv, n, m, p)
    return OptTrace("GN", records, None, reason, gn_final=(a, b, c))
