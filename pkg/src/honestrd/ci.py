"""Confidence intervals from a linear estimator and the choice of its
smoothing parameters.

Given the estimate, its worst-case bias and standard deviation:

* one-sided:  ``[Lhat - maxbias - sd z_{1-alpha}, inf)``
* two-sided fixed length:  ``Lhat +- cv_alpha(maxbias / sd) sd``

Smoothing parameters are chosen to minimize one of three worst-case
criteria: FLCI length, the ``beta`` quantile of one-sided excess length,
or mean squared error.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from . import _core
from .bias import (ehw_residuals, nn_residual_variance, prelim_sigma2, sd_known,
                   sd_robust, worst_case_bias_holder2, worst_case_bias_taylor)
from .critical import cv, normal_quantile
from .design import (HOLDER, TAYLOR, Design, EstimateReport, PerformanceCriterion,
                     SmoothnessClass, WeightSet, validate_design)
from .exceptions import DomainError, HonestRDError, OptimizationFailed
from .kernels import TRIANGULAR, get_kernel
from .weights import gls_weights, lp_weights, optimal_weights

GRID_POINTS = 60
TIE_RTOL = 1e-12


def one_sided_ci(Lhat, maxbias, sd, alpha=0.05) -> float:
    """Lower endpoint of the one-sided interval ``[c, inf)``."""
    return Lhat - maxbias - sd * normal_quantile(1 - alpha)


def flci(Lhat, maxbias, sd, alpha=0.05):
    """Fixed-length interval; returns ``(half_length, (lower, upper))``."""
    if not sd > 0:
        raise DomainError(f"sd must be positive, got {sd}")
    half = cv(maxbias / sd, alpha) * sd
    return half, (Lhat - half, Lhat + half)


@lru_cache(maxsize=64)
def _quantiles(alpha, beta):
    return (normal_quantile(1 - alpha / 2),
            normal_quantile(1 - alpha) + normal_quantile(beta))


def criterion_from(maxbias, sd, crit: PerformanceCriterion) -> float:
    if crit.kind == "flci":
        z_half = _quantiles(crit.alpha, crit.beta)[0]
        return 2.0 * sd * _core.cv_scalar(maxbias / sd, crit.alpha, z_half)
    if crit.kind == "excess":
        return 2.0 * maxbias + sd * _quantiles(crit.alpha, crit.beta)[1]
    return maxbias ** 2 + sd ** 2


def maxbias_of(w: WeightSet, cls: SmoothnessClass, d: Design) -> float:
    if cls.family == HOLDER:
        return worst_case_bias_holder2(w, cls.C, d)
    return worst_case_bias_taylor(w, cls.C, cls.p, d)


def criterion_value(w: WeightSet, cls: SmoothnessClass, d: Design,
                    crit: PerformanceCriterion) -> float:
    return criterion_from(maxbias_of(w, cls, d), sd_known(w, d), crit)


def _parse_family(family):
    """``"optimal"`` or ``"lp:<kernel>"`` (also a Kernel or bare kernel name)."""
    if isinstance(family, str):
        f = family.lower()
        if f == "optimal":
            return "optimal", None
        if f.startswith("lp:"):
            return "lp", get_kernel(f[3:])
        if f == "lp":
            return "lp", TRIANGULAR
    return "lp", get_kernel(family)


class _LPObjective:
    """Criterion as a function of ``(h_plus, h_minus)`` using side sums only."""

    def __init__(self, d, cls, crit, kernel):
        self.cls, self.crit, self.kernel = cls, crit, kernel
        self.p = cls.p
        self.sides = []
        for mask in (d.plus, d.minus):
            self.sides.append((np.ascontiguousarray(d.x[mask]),
                               np.ascontiguousarray(d.sigma2[mask])))
        self.cache = {}

    def side(self, k, h):
        key = (k, h)
        if key not in self.cache:
            x, s2 = self.sides[k]
            if self.kernel.code >= 0:
                st = _core.lp_side_stats(x, s2, float(h), self.kernel.code, self.p)
            else:
                from ._kernels_py import lp_weights_from_kw
                w = lp_weights_from_kw(x, self.kernel(x / h), h, self.p)
                st = (np.sum(np.abs(w) * np.abs(x) ** self.p),
                      np.sum(w * w * s2), np.sum(w * x * x))
            self.cache[key] = tuple(float(v) for v in st)
        return self.cache[key]

    def __call__(self, hp, hm):
        Ap, Vp, Hp = self.side(0, hp)
        Am, Vm, Hm = self.side(1, hm)
        if math.isnan(Ap) or math.isnan(Am):
            return math.inf
        C = self.cls.C
        if self.cls.family == HOLDER:
            # w_+ g* = C H_+, w_- g* = -C H_-
            mb = C * abs(Hp + Hm)
        else:
            mb = C * (Ap + Am)
        return float(criterion_from(mb, math.sqrt(Vp + Vm), self.crit))


def _argmin_last(values):
    """Index of the minimum; among (near) ties the last one."""
    v = np.asarray(values)
    m = np.min(v)
    if not np.isfinite(m):
        return None
    return int(np.flatnonzero(v <= m + TIE_RTOL * abs(m))[-1])


def _line_search(f, grid):
    """Minimize ``f`` over the log grid, then refine around the best point.

    Returns ``(h, value)``; the value is never worse than the grid minimum.
    """
    vals = [f(h) for h in grid]
    i = _argmin_last(vals)
    if i is None:
        return None, math.inf
    best_h, best_v = grid[i], vals[i]
    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[min(i + 1, len(grid) - 1)])
    if hi > lo:
        res = minimize_scalar(lambda t: f(math.exp(t)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-6})
        if res.fun < best_v - TIE_RTOL * abs(best_v):
            best_h, best_v = math.exp(res.x), float(res.fun)
    return best_h, best_v


def bandwidth_grid(x_side, p, h_max, points=GRID_POINTS):
    ax = np.sort(np.abs(x_side))
    k = min(2 * p, ax.size) - 1
    h_min = ax[k]
    if not h_min > 0:
        h_min = ax[ax > 0][0] if np.any(ax > 0) else h_max
    if h_min >= h_max:
        return np.array([h_max])
    return np.exp(np.linspace(math.log(h_min), math.log(h_max), points))


def _optimize_lp(d, cls, crit, kernel, max_sweeps=10):
    obj = _LPObjective(d, cls, crit, kernel)
    h_max = float(np.max(np.abs(d.x)))
    gp = bandwidth_grid(d.x[d.plus], cls.p, h_max)
    gm = bandwidth_grid(d.x[d.minus], cls.p, h_max)
    # start from a common bandwidth, then alternate between sides
    common = np.union1d(gp, gm)
    h, v = _line_search(lambda t: obj(t, t), common)
    if h is None:
        raise OptimizationFailed(
            f"no bandwidth gives {cls.p} support points on both sides")
    hp = hm = h
    for sweep in range(max_sweeps):
        v_old = v
        hp_new, vp = _line_search(lambda t: obj(t, hm), gp)
        if vp < v or (vp == v and hp_new > hp):
            hp, v = hp_new, vp
        hm_new, vm = _line_search(lambda t: obj(hp, t), gm)
        if vm < v or (vm == v and hm_new > hm):
            hm, v = hm_new, vm
        if sweep >= 1 and v >= v_old - TIE_RTOL * abs(v_old):
            break
    return lp_weights(d, hp, hm, kernel, cls.p)


def b_grid(d: Design, cls: SmoothnessClass, points=GRID_POINTS):
    """Log grid of jump parameters ``b = C (h_+^p + h_-^p)`` for the optimal family."""
    p, C = cls.p, cls.C
    h_max = float(np.max(np.abs(d.x)))
    ax = np.sort(np.abs(d.x))
    h_min = ax[min(2 * p, ax.size) - 1]
    h_min = h_min if h_min > 0 else h_max / points
    return np.exp(np.linspace(math.log(C * h_min ** p), math.log(2 * C * (2 * h_max) ** p),
                              points))


class _OptimalObjective:
    def __init__(self, d, cls, crit):
        self.d, self.cls, self.crit = d, cls, crit
        self.cache = {}
        self.start = None

    def weights(self, b):
        if b not in self.cache:
            try:
                w = optimal_weights(self.d, self.cls, b, start=self.start)
                self.start = w.extra.get("coeffs")
            except HonestRDError:
                w = None
            self.cache[b] = w
        return self.cache[b]

    def __call__(self, b):
        w = self.weights(b)
        if w is None:
            return math.inf
        mb = worst_case_bias_taylor(w, self.cls.C, self.cls.p, self.d, check=False)
        return float(criterion_from(mb, sd_known(w, self.d), self.crit))


def _optimize_optimal(d, cls, crit):
    if cls.family != TAYLOR:
        raise DomainError("optimal weights are only available for the Taylor class")
    if cls.C == 0:
        return gls_weights(d, cls.p)
    obj = _OptimalObjective(d, cls, crit)
    b, v = _line_search(obj, b_grid(d, cls))
    if b is None:
        raise OptimizationFailed("no jump parameter gives nondegenerate optimal weights")
    return obj.weights(b)


def _report(d, cls, crit, w, sd=None, sd_design=None) -> EstimateReport:
    mb = maxbias_of(w, cls, d)
    sd0 = sd_known(w, d)
    sd = sd0 if sd is None else sd
    Lhat = w.estimate(d.y)
    alpha = crit.alpha
    half, (lo, hi) = flci(Lhat, mb, sd, alpha)
    z = normal_quantile(1 - alpha)
    return EstimateReport(
        Lhat=Lhat, maxbias=mb, sd=sd, ci_lower=lo, ci_upper=hi,
        onesided_lower=Lhat - mb - sd * z, onesided_upper=Lhat + mb + sd * z,
        half_length=half, h_plus=w.h_plus, h_minus=w.h_minus,
        criterion=crit.kind, criterion_value=float(criterion_from(mb, sd, crit)),
        alpha=alpha, weights=w,
        sd_design=sd0 if sd_design is None else sd_design, C=cls.C)


def optimize_smoothing(d: Design, cls: SmoothnessClass, crit: PerformanceCriterion,
                       family="lp:triangular") -> EstimateReport:
    """Choose smoothing parameters minimizing ``crit`` under the design variances.

    ``family`` is ``"optimal"`` or ``"lp:<kernel>"``. Local polynomial
    bandwidths are searched on a log grid per side, refined by bounded
    Brent search, alternating between sides until no further improvement.
    The optimal family is searched over its jump parameter ``b`` the same
    way.
    """
    d = validate_design(d)
    kind, kernel = _parse_family(family)
    if kind == "optimal":
        w = _optimize_optimal(d, cls, crit)
    else:
        w = _optimize_lp(d, cls, crit, kernel)
    return _report(d, cls, crit, w)


def parse_variance_mode(mode):
    """``"known"``, ``"ehw"``, ``"nn:J"`` or ``("nn", J)`` -> ``(kind, J)``."""
    if isinstance(mode, tuple):
        return mode[0], int(mode[1])
    m = str(mode).lower()
    if m == "nn" or m.startswith("nn:"):
        try:
            J = int(m.split(":", 1)[1]) if ":" in m else 3
        except ValueError:
            J = 0
        if J < 1:
            raise DomainError(f"nn:J needs a positive integer J, got {mode!r}")
        return "nn", J
    if m in ("known", "ehw"):
        return m, None
    raise DomainError(f"unknown variance mode {mode!r}")


def analyze(d: Design, cls: SmoothnessClass, crit: PerformanceCriterion,
            family="lp:triangular", variance_mode="nn:3", h_pilot=None,
            fixed_h=None) -> EstimateReport:
    """Full pipeline: preliminary variance, weights, smoothing choice, CI.

    With ``variance_mode="known"`` the design variances are used throughout.
    Otherwise smoothing parameters are chosen under side-wise constant
    variances from a pilot local linear fit, and the reported standard
    deviation uses nearest-neighbour (``"nn:J"``) or EHW residuals.
    ``fixed_h = (h_plus, h_minus)`` skips the search (local polynomial only).
    """
    d = validate_design(d)
    kind, J = parse_variance_mode(variance_mode)
    if kind == "known":
        d_design = d
    else:
        s2p, s2m = prelim_sigma2(d, h_pilot)
        d_design = d.with_sigma2(np.where(d.plus, s2p, s2m), "estimated")
    fam, kernel = _parse_family(family)
    if fixed_h is not None:
        if fam != "lp":
            raise DomainError("fixed bandwidths need a local polynomial family")
        w = lp_weights(d, fixed_h[0], fixed_h[1], kernel, cls.p)
    elif fam == "optimal":
        w = _optimize_optimal(d_design, cls, crit)
    else:
        w = _optimize_lp(d_design, cls, crit, kernel)
    sd_design = sd_known(w, d_design)
    if kind == "known":
        sd = sd_design
    elif kind == "nn":
        sd = sd_robust(w, nn_residual_variance(d, J))
    else:
        sd = sd_robust(w, ehw_residuals(w, d, cls.p, kernel or TRIANGULAR))
    return _report(d, cls, crit, w, sd=sd, sd_design=sd_design)
