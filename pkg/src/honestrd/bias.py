"""Worst-case bias, standard deviation and variance estimation for linear
estimators ``sum(w_plus*y) - sum(w_minus*y)``."""

from __future__ import annotations

import numpy as np

from . import _core
from .design import Design, WeightSet
from .exceptions import InfiniteBias, SingularMomentMatrix, TooFewNeighbors
from .kernels import TRIANGULAR

UNBIASED_TOL = 1e-9


def check_unbiasedness(w: WeightSet, p, d: Design) -> float:
    """Largest violation of the moment conditions the weights must satisfy.

    Each side must sum to one and be orthogonal to ``x, ..., x^(p-1)``.
    Moments of order ``j`` are measured relative to ``max|x|^j`` so the
    residual does not depend on the units of ``x``.
    """
    s = float(np.max(np.abs(d.x))) or 1.0
    u = d.x / s
    res = [abs(np.sum(w.w_plus) - 1.0), abs(np.sum(w.w_minus) - 1.0)]
    for j in range(1, p):
        uj = u ** j
        res.append(abs(w.w_plus @ uj))
        res.append(abs(w.w_minus @ uj))
    return float(max(res))


def worst_case_bias_taylor(w: WeightSet, C, p, d: Design, check=True) -> float:
    """``C * sum |w_plus + w_minus| |x|^p``: worst-case bias over the Taylor class.

    Raises InfiniteBias if the weights are not unbiased for polynomials of
    order ``p - 1``, since the bias is then unbounded over the class.
    """
    if check:
        r = check_unbiasedness(w, p, d)
        if r > UNBIASED_TOL:
            raise InfiniteBias(
                f"weights violate the moment conditions by {r:.3g}; bias is unbounded")
    if C == 0:
        return 0.0
    return float(C * np.sum(np.abs(w.combined) * np.abs(d.x) ** p))


def holder_least_favorable(x, C):
    """``C x^2 sign(x)``, the worst case over the Hölder class for local linear weights."""
    x = np.asarray(x, dtype=float)
    return C * x * x * np.where(x >= 0, 1.0, -1.0)


def worst_case_bias_holder2(w: WeightSet, C, d: Design) -> float:
    """Bias of a local linear estimator at ``g*(x) = C x^2 sign(x)``.

    ``g*`` has zero jump, so its estimate ``sum w_+ g* - sum w_- g*`` is the
    bias; both sides contribute ``C sum w x^2``.
    """
    g = holder_least_favorable(d.x, C)
    return float(abs(w.w_plus @ g - w.w_minus @ g))


def sd_known(w: WeightSet, d: Design) -> float:
    return float(np.sqrt(np.sum(w.combined ** 2 * d.sigma2)))


def sd_robust(w: WeightSet, u2) -> float:
    """``sqrt(sum (w_plus + w_minus)^2 u2)`` with plug-in squared residuals."""
    return float(np.sqrt(np.sum(w.combined ** 2 * np.asarray(u2))))


def nn_residual_variance(d: Design, J=3) -> np.ndarray:
    """Nearest-neighbour variance proxies ``J/(J+1) (y_i - mean of J neighbours)^2``.

    Neighbours are the ``J`` closest observations on the same side of the
    cutoff; ties in distance go to the smaller index in sorted order.
    ``d`` must be sorted by ``x`` (see ``validate_design``).
    """
    J = int(J)
    if J < 1:
        raise TooFewNeighbors(f"J must be at least 1, got {J}")
    out = np.empty(d.n)
    for mask, name in ((d.plus, "above"), (d.minus, "below")):
        m = int(mask.sum())
        if m < J + 1:
            raise TooFewNeighbors(
                f"{m} observations {name} the cutoff; need at least {J + 1} for J={J}")
        out[mask] = _core.nn_sq_residuals(
            np.ascontiguousarray(d.x[mask]), np.ascontiguousarray(d.y[mask]), J)
    return out


def _ll_residuals(x, y, h, kernel):
    kw = kernel(x / h)
    keep = kw > 0
    if np.unique(x[keep]).size < 2:
        raise SingularMomentMatrix(
            "fewer than 2 distinct points inside the pilot bandwidth")
    X = np.column_stack([np.ones(keep.sum()), x[keep] / h])
    sw = np.sqrt(kw[keep])
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y[keep] * sw, rcond=None)
    return y[keep] - X @ coef


def default_pilot_bandwidth(d: Design) -> float:
    ax = np.abs(d.x)
    return float((ax.max() - ax.min()) / 2.0)


def prelim_sigma2(d: Design, h_pilot=None, kernel=TRIANGULAR):
    """Side-wise variance at the cutoff from local linear residuals.

    Mean squared residual (no degrees-of-freedom correction) over the points
    with positive kernel weight. Returns ``(sigma2_plus, sigma2_minus)``.
    """
    if h_pilot is None:
        h_pilot = default_pilot_bandwidth(d)
    out = []
    for mask in (d.plus, d.minus):
        r = _ll_residuals(d.x[mask], d.y[mask], h_pilot, kernel)
        out.append(float(np.mean(r * r)))
    return tuple(out)


def ehw_residuals(w: WeightSet, d: Design, p, kernel=TRIANGULAR) -> np.ndarray:
    """Squared residuals from the side-wise kernel polynomial fits at the
    bandwidths of ``w`` (Eicker-Huber-White plug-in). Zero outside the window."""
    out = np.zeros(d.n)
    for mask, h in ((d.plus, w.h_plus), (d.minus, w.h_minus)):
        x, y = d.x[mask], d.y[mask]
        if not np.isfinite(h):
            h = float(np.max(np.abs(x))) * (1 + 1e-12)
        kw = kernel(x / h)
        keep = kw > 0
        X = np.vander(x[keep] / h, p, increasing=True)
        sw = np.sqrt(kw[keep])
        coef, *_ = np.linalg.lstsq(X * sw[:, None], y[keep] * sw, rcond=None)
        r = np.zeros(x.size)
        r[keep] = y[keep] - X @ coef
        out[mask] = r * r
    return out
