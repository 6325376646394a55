"""Normal-distribution helpers and folded-normal critical values.

``cv(b, alpha)`` is the ``1 - alpha`` quantile of ``|N(b, 1)|``: the critical
value for a two-sided interval around an estimator whose bias, in standard
deviation units, may be anywhere in ``[-b, b]``.
"""

import numpy as np
from scipy.special import ndtr, ndtri

from . import _core
from .exceptions import DomainError

CV_TOL = 1e-12


def normal_cdf(z):
    return ndtr(z)


def normal_quantile(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    out = ndtri(p_arr)
    return float(out) if np.ndim(out) == 0 else out


def _check_alpha(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any(~((a > 0) & (a < 1))):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return a


def folded_tail(c, b):
    """P(|Z + b| > c) for standard normal Z."""
    return ndtr(-c - b) + ndtr(b - c)


def cv(b, alpha=0.05):
    """Critical value ``c`` with ``P(|Z + b| <= c) = 1 - alpha``.

    Vectorized over ``b`` and ``alpha``. Bisection on the bracket
    ``[max(b, z) - 1, b + z + 1]`` with ``z = z_{1-alpha/2}``; the tail
    probability is monotone in ``c`` so bisection cannot fail. Scalar calls
    take a Newton-accelerated path that keeps the same bracket as a
    safeguard.
    """
    if np.ndim(b) == 0 and np.ndim(alpha) == 0:
        bf, af = float(b), float(alpha)
        if not 0 < af < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
        if not bf >= 0:
            raise DomainError("bias-to-sd ratio b must be nonnegative")
        return _core.cv_scalar(bf, af, float(ndtri(1 - af / 2)))
    b = np.asarray(b, dtype=float)
    a = _check_alpha(alpha)
    if np.any(~(b >= 0)):
        raise DomainError("bias-to-sd ratio b must be nonnegative")
    b, a = np.broadcast_arrays(b, a)
    z = ndtri(1 - a / 2)
    lo = np.maximum(b, z) - 1.0
    hi = b + z + 1.0
    # tail(c) is decreasing in c; find tail(c) = alpha
    while np.any(hi - lo > CV_TOL):
        mid = 0.5 * (lo + hi)
        too_small = folded_tail(mid, b) > a
        lo = np.where(too_small, mid, lo)
        hi = np.where(too_small, hi, mid)
    out = 0.5 * (lo + hi)
    return float(out) if out.ndim == 0 else out


def cv_inverse(c, alpha=0.05):
    """Noncentrality ``t >= 0`` with ``cv(t, alpha) = c``.

    Returns 0 when ``c <= cv(0, alpha)``. ``cv`` is strictly increasing in
    ``t`` and ``cv(t) >= t``, so the root lies in ``[0, c]``.
    """
    c = np.asarray(c, dtype=float)
    a = _check_alpha(alpha)
    c, a = np.broadcast_arrays(c, a)
    lo = np.zeros_like(c)
    hi = np.maximum(c, 0.0)
    # cv(t) > c  <=>  P(|Z+t| > c) > alpha
    while np.any(hi - lo > CV_TOL):
        mid = 0.5 * (lo + hi)
        below = folded_tail(c, mid) <= a
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = np.where(c <= ndtri(1 - a / 2), 0.0, 0.5 * (lo + hi))
    return float(out) if out.ndim == 0 else out
