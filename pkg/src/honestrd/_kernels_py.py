"""Pure numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function; ``_core`` picks one at
import time. Results agree with the compiled versions to rounding error.
"""

import math

import numpy as np

_KERNEL_FUNCS = {
    0: lambda u: np.maximum(0.0, 1.0 - np.abs(u)),
    1: lambda u: np.where(np.abs(u) <= 1.0, 0.5, 0.0),
    2: lambda u: 0.75 * np.maximum(0.0, 1.0 - u * u),
}


def lp_weights_from_kw(x, kw, h, p):
    """Intercept weights of a weighted polynomial fit of order ``p - 1``.

    ``kw`` are the kernel weights; polynomial terms use ``x / h`` for
    conditioning (the intercept is unaffected). Returns all-NaN when the
    moment matrix is singular.
    """
    u = x / h
    R = np.vander(u, p, increasing=True)
    M = (R * kw[:, None]).T @ R
    try:
        # fewer than p distinct support points: singular, though solve()
        # might still return rounding noise
        if np.unique(x[kw > 0]).size < p:
            raise np.linalg.LinAlgError
        e1 = np.linalg.solve(M, np.eye(p)[:, 0])
    except np.linalg.LinAlgError:
        return np.full(x.shape, np.nan)
    return kw * (R @ e1)


def lp_side_weights(x, h, kernel_id, p):
    kw = _KERNEL_FUNCS[kernel_id](x / h)
    return lp_weights_from_kw(x, kw, h, p)


def lp_side_stats(x, sigma2, h, kernel_id, p):
    """Side contributions ``(sum |w||x|^p, sum w^2 sigma2, sum w x^2)``."""
    w = lp_side_weights(x, h, kernel_id, p)
    ax = np.abs(x)
    return (float(np.sum(np.abs(w) * ax ** p)),
            float(np.sum(w * w * sigma2)),
            float(np.sum(w * x * x)))


def _exact_neighbours(x, i, J, d):
    """Neighbour indices of ``i`` when distance ties cross the search window."""
    # slack makes the candidate range a superset despite rounding in x +- d
    slack = 1e-12 * (abs(x[i]) + d) + 1e-300
    lo = np.searchsorted(x, x[i] - d - slack, "left")
    hi = np.searchsorted(x, x[i] + d + slack, "right")
    j = np.arange(lo, hi)
    j = j[j != i]
    dist = np.abs(x[j] - x[i])
    order = np.lexsort((j, dist))  # by distance, then index
    return j[order[:J]]


def nn_sq_residuals(x, y, J):
    """Nearest-neighbour squared residuals on one side of the cutoff.

    ``x`` must be sorted ascending. Neighbours are the ``J`` closest other
    observations; distance ties go to the smaller index.
    """
    m = x.size
    idx = np.arange(m)
    offsets = np.concatenate([np.arange(-J, 0), np.arange(1, J + 1)])
    cand = idx[:, None] + offsets[None, :]  # ascending index within each row
    valid = (cand >= 0) & (cand < m)
    candc = np.clip(cand, 0, m - 1)
    dist = np.where(valid, np.abs(x[candc] - x[:, None]), np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    nb = np.take_along_axis(candc, order[:, :J], axis=1)
    sdist = np.take_along_axis(dist, order, axis=1)
    dJ = sdist[:, J - 1]
    # a tie at the J-th distance may involve points outside the window
    tied = (sdist[:, J] == dJ) | (dist[:, 0] == dJ) | (dist[:, -1] == dJ)
    for i in np.flatnonzero(tied):
        nb[i] = _exact_neighbours(x, i, J, dJ[i])
    resid = y - y[nb].mean(axis=1)
    return J / (J + 1.0) * resid * resid


_SQRT2 = math.sqrt(2.0)


def _ncdf(z):
    return 0.5 * math.erfc(-z / _SQRT2)


def cv_scalar(b, alpha, z_half):
    """Folded normal critical value for one ``(b, alpha)`` pair.

    Newton on ``P(|Z + b| > c) = alpha`` safeguarded by the bracket
    ``[max(b, z_half) - 1, b + z_half + 1]``; ``z_half = z_{1-alpha/2}``.
    """
    lo = max(b, z_half) - 1.0
    hi = b + z_half + 1.0
    c = max(b + 0.7 * z_half, z_half)
    for _ in range(100):
        f = _ncdf(-c - b) + _ncdf(b - c) - alpha
        if f > 0:
            lo = c
        else:
            hi = c
        dens = (math.exp(-0.5 * (c + b) ** 2) + math.exp(-0.5 * (c - b) ** 2)) \
            * 0.3989422804014327
        step = f / dens if dens > 0 else 0.0
        nxt = c + step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - c) <= 1e-15 * max(1.0, c) or hi - lo <= 4e-16 * max(1.0, c):
            return nxt
        c = nxt
    return c
