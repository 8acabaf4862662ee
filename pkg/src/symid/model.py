"""Discrete-time simulation, the prediction-error objective, and its
Euclidean gradient.

The error vector stacks y_k - yhat_k for k = 1..K (the k = 0 output carries
no parameter information because the simulated initial state is fixed at
zero).  The gradient of the squared error is accumulated by an O(K n^2)
backward recursion, and output directional derivatives by an O(K n^2)
forward recursion; both run in the selected kernel backend.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .manifold import SystemTriple

__all__ = [
    "IODataset",
    "GradientTriple",
    "simulate",
    "objective",
    "euclid_gradient",
    "output_dderiv",
    "save_dataset",
    "load_dataset",
]


@dataclass(frozen=True)
class IODataset:
    """Sampled input/output records u_0..u_K, y_0..y_K with interval h.

    ``y_clean`` optionally stores the noise-free outputs (for SNR reporting).
    """

    u: np.ndarray
    y: np.ndarray
    h: float
    y_clean: np.ndarray | None = None

    def __post_init__(self):
        u = np.ascontiguousarray(np.atleast_2d(self.u), dtype=float)
        y = np.ascontiguousarray(np.atleast_2d(self.y), dtype=float)
        if u.shape[0] != y.shape[0]:
            raise ValueError("u and y must have the same number of samples")
        if u.shape[0] < 2:
            raise ValueError("need at least two samples")
        if not self.h > 0:
            raise ValueError("sampling interval h must be positive")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)
        if self.y_clean is not None:
            yc = np.ascontiguousarray(np.atleast_2d(self.y_clean), dtype=float)
            if yc.shape != y.shape:
                raise ValueError("y_clean must match the shape of y")
            object.__setattr__(self, "y_clean", yc)

    @property
    def K(self) -> int:
        return self.u.shape[0] - 1

    @property
    def m(self) -> int:
        return self.u.shape[1]

    @property
    def p(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class GradientTriple:
    """Euclidean gradient blocks (G_A, G_B, G_C); G_A is not symmetric."""

    G_A: np.ndarray
    G_B: np.ndarray
    G_C: np.ndarray


def _check_dims(theta: SystemTriple, m: int, p: int) -> None:
    if theta.m != m or theta.p != p:
        raise ValueError(
            f"model has (m, p) = ({theta.m}, {theta.p}), data ({m}, {p})"
        )


def simulate(theta: SystemTriple, u: np.ndarray, x0: np.ndarray | None = None):
    """Run x_{k+1} = A x_k + B u_k, y_k = C x_k from x_0 (default zero).

    Returns the state trajectory (K+1, n) and outputs (K+1, p).
    """
    u = np.ascontiguousarray(np.atleast_2d(u), dtype=float)
    if u.shape[1] != theta.m:
        raise ValueError(f"input dimension {u.shape[1]} != m = {theta.m}")
    if x0 is None:
        x0 = np.zeros(theta.n)
    x0 = np.ascontiguousarray(x0, dtype=float)
    if x0.shape != (theta.n,):
        raise ValueError("x0 has wrong length")
    return kernels.simulate(theta.A, theta.B, theta.C, u, x0)


def objective(theta: SystemTriple, data: IODataset):
    """Squared prediction error and the stacked error vector.

    Returns (f, e) with e = (y_1 - yhat_1; ...; y_K - yhat_K) of length p*K
    and f = ||e||_2^2.  A diverging simulation yields f = inf.
    """
    _check_dims(theta, data.m, data.p)
    _, yhat = simulate(theta, data.u)
    with np.errstate(over="ignore", invalid="ignore"):
        e = (data.y[1:] - yhat[1:]).ravel()
        f = float(e @ e)
    if not np.isfinite(f):
        f = float("inf")
    return f, e


def euclid_gradient(theta: SystemTriple, data: IODataset) -> GradientTriple:
    """Euclidean gradient of the squared error via the backward recursion.

    Cost O(K n^2) for m, p < n.  The directional derivative along a triple
    (xi_A, xi_B, xi_C) with symmetric xi_A is
    tr(xi_A sym(G_A)) + tr(xi_B^T G_B) + tr(xi_C^T G_C).
    """
    _check_dims(theta, data.m, data.p)
    x, yhat = simulate(theta, data.u)
    resid = np.ascontiguousarray(data.y - yhat)
    g_a, g_b = kernels.gradient_core(theta.A, theta.C, resid, x, data.u)
    g_c = -2.0 * resid[1:].T @ x[1:]
    return GradientTriple(g_a, g_b, g_c)


def output_dderiv(
    theta: SystemTriple,
    xi_A: np.ndarray,
    xi_B: np.ndarray,
    xi_C: np.ndarray,
    data: IODataset,
) -> np.ndarray:
    """Directional derivatives of the simulated outputs, k = 1..K.

    xi_A need not be symmetric (the Gauss-Newton baseline differentiates
    along every coordinate direction).  Returns an array of shape (K, p).
    """
    _check_dims(theta, data.m, data.p)
    x, _ = simulate(theta, data.u)
    xi_A = np.ascontiguousarray(np.atleast_2d(xi_A), dtype=float)
    xi_B = np.ascontiguousarray(np.atleast_2d(xi_B), dtype=float)
    xi_C = np.ascontiguousarray(np.atleast_2d(xi_C), dtype=float)
    dy = kernels.sensitivity(theta.A, theta.C, xi_A, xi_B, xi_C, x, data.u)
    return dy[1:]


def save_dataset(
    data: IODataset,
    csv_path,
    meta_path,
    *,
    n: int,
    seed: int | None = None,
    sigma2: float | None = None,
    snr: float | None = None,
) -> None:
    """Write the CSV table (t, u_*, y_*, optional y_clean_*) plus the JSON
    sidecar carrying n, m, p, h, K, seed, sigma2."""
    csv_path = Path(csv_path)
    meta_path = Path(meta_path)
    header = ["t"]
    header += [f"u_{i + 1}" for i in range(data.m)]
    header += [f"y_{i + 1}" for i in range(data.p)]
    if data.y_clean is not None:
        header += [f"y_clean_{i + 1}" for i in range(data.p)]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(data.K + 1):
            row = [repr(float(k * data.h))]
            row += [repr(float(v)) for v in data.u[k]]
            row += [repr(float(v)) for v in data.y[k]]
            if data.y_clean is not None:
                row += [repr(float(v)) for v in data.y_clean[k]]
            writer.writerow(row)
    meta = {
        "n": n,
        "m": data.m,
        "p": data.p,
        "h": data.h,
        "K": data.K,
        "seed": seed,
        "sigma2": sigma2,
    }
    if snr is not None:
        meta["snr"] = snr if np.isfinite(snr) else "inf"
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_dataset(csv_path, meta_path):
    """Read a dataset written by :func:`save_dataset`.

    Returns (IODataset, meta dict)."""
    with open(meta_path) as fh:
        meta = json.load(fh)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        table = np.array([[float(v) for v in row] for row in reader])
    m = sum(1 for c in header if c.startswith("u_"))
    p = sum(1 for c in header if c.startswith("y_") and not c.startswith("y_clean_"))
    has_clean = any(c.startswith("y_clean_") for c in header)
    u = table[:, 1 : 1 + m]
    y = table[:, 1 + m : 1 + m + p]
    y_clean = table[:, 1 + m + p : 1 + m + 2 * p] if has_clean else None
    return IODataset(u=u, y=y, h=float(meta["h"]), y_clean=y_clean), meta
