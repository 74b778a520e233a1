"""Finite-difference weights (Fornberg's recursion) and small helpers."""

from functools import lru_cache

import numpy as np


def fornberg_weights(z, x, m):
    """Weights for derivatives 0..m at ``z`` from nodes ``x``.

    Returns an array ``c`` of shape ``(len(x), m + 1)``; ``c[:, k]`` are the
    weights of the k-th derivative.  B. Fornberg, Math. Comp. 51 (1988).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


@lru_cache(maxsize=None)
def stencil(offsets, order):
    """Unit-spacing weights for derivative ``order`` on integer ``offsets``."""
    return fornberg_weights(0.0, np.array(offsets, dtype=float), order)[:, order]


def central_offsets(order, accuracy):
    # a centred stencil with 2p+1 points is accurate to 2p + 2 - 2*ceil(order/2)
    p = accuracy // 2 - 1 + (order + 1) // 2
    return tuple(range(-p, p + 1))


def central_derivative(f, x, order, h, accuracy=8):
    """Central finite difference of a vectorised callable."""
    offs = central_offsets(order, accuracy)
    w = stencil(offs, order)
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    for o, wk in zip(offs, w):
        if wk != 0.0:
            acc = acc + wk * f(x + o * h)
    return acc / h**order


def loglog_slope(x, y):
    """Least-squares slope and max abs residual of log|y| against log|x|."""
    lx = np.log(np.abs(np.asarray(x, dtype=float)))
    ly = np.log(np.abs(np.asarray(y, dtype=float)))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(coef[1]), float(np.max(np.abs(resid)))
