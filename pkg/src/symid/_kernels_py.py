"""Pure-numpy recursion kernels (fallback backend).

Same contracts as the compiled extension ``symid._kernels``; one numpy call
per time step.  Overflow in a diverging simulation propagates as inf rather
than raising, so line searches can reject the step.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def simulate(A, B, C, u, x0):
    """State/output recursion x_{k+1} = A x_k + B u_k, y_k = C x_k.

    u has shape (T, m); returns x (T, n) and y (T, p).
    """
    T = u.shape[0]
    n = A.shape[0]
    p = C.shape[0]
    x = np.empty((T, n))
    y = np.empty((T, p))
    x[0] = x0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(T - 1):
            x[k + 1] = A @ x[k] + B @ u[k]
        y[:] = x @ C.T
    return x, y


def gradient_core(A, C, resid, x, u):
    """Backward accumulation of the A- and B-blocks of the error gradient.

    resid (T, p) holds y_k - yhat_k; rows 1..K enter, row 0 is ignored.
    Returns (G_A, G_B), each including the -2 factor.
    """
    T = x.shape[0]
    K = T - 1
    n = A.shape[0]
    m = u.shape[1]
    G_A = np.zeros((n, n))
    G_B = np.zeros((n, m))
    if K < 1:
        return G_A, G_B
    with np.errstate(over="ignore", invalid="ignore"):
        gamma = C.T @ resid[K]
        G_A -= 2.0 * np.outer(gamma, x[K - 1])
        G_B -= 2.0 * np.outer(gamma, u[K - 1])
        for i in range(1, K):
            gamma = C.T @ resid[K - i] + A @ gamma
            G_A -= 2.0 * np.outer(gamma, x[K - 1 - i])
            G_B -= 2.0 * np.outer(gamma, u[K - 1 - i])
    return G_A, G_B


def sensitivity(A, C, xi_A, xi_B, xi_C, x, u):
    """Forward output sensitivity along an arbitrary direction triple.

    s_{k+1} = A s_k + xi_A x_k + xi_B u_k with s_0 = 0;
    dy_k = C s_k + xi_C x_k.  Returns dy with shape (T, p).
    """
    T = x.shape[0]
    n = A.shape[0]
    p = C.shape[0]
    s = np.zeros(n)
    dy = np.empty((T, p))
    with np.errstate(over="ignore", invalid="ignore"):
        dy[0] = xi_C @ x[0]
        for k in range(T - 1):
            s = A @ s + xi_A @ x[k] + xi_B @ u[k]
            dy[k + 1] = C @ s + xi_C @ x[k + 1]
    return dy
