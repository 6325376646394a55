"""Monte Carlo coverage harness.

Each replication draws its own sample from a stream that depends only on
``(seed, replication index)``: first ``n`` uniforms for the running variable
(``x = 2u - 1``), then ``n`` uniforms mapped to normal errors through the
inverse normal CDF. Results are therefore identical however replications
are scheduled across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from .ci import analyze
from .design import HOLDER, TAYLOR, Design, PerformanceCriterion, SmoothnessClass
from .exceptions import DomainError

# knots (b1, b2) of the spline designs; design 4 is f = 0
DESIGN_KNOTS = {1: (0.45, 0.75), 2: (0.4, 0.9), 3: (0.25, 0.65)}
SIGMA2_LEVELS = (0.1295, 4 * 0.1295)


def spline_f(x, C=1.0, b1=0.45, b2=0.75):
    """Odd quadratic spline ``sign(x) C (x^2 - 2(|x|-b1)_+^2 + 2(|x|-b2)_+^2)``."""
    if not 0 < b1 < b2 <= 1:
        raise DomainError(f"need 0 < b1 < b2 <= 1, got {b1}, {b2}")
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    v = a * a - 2 * np.maximum(a - b1, 0) ** 2 + 2 * np.maximum(a - b2, 0) ** 2
    return np.where(x >= 0, 1.0, -1.0) * C * v


def design_function(design_id, C=1.0) -> Callable:
    if design_id == 4:
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if design_id not in DESIGN_KNOTS:
        raise DomainError(f"design must be 1, 2, 3 or 4, got {design_id}")
    b1, b2 = DESIGN_KNOTS[design_id]
    return lambda x: spline_f(x, C, b1, b2)


@dataclass
class McDesign:
    """Data generating process. ``f`` overrides ``design_id``; ``x_fixed``
    replaces the uniform draw by a fixed design."""

    design_id: int = 1
    C: float = 1.0
    sigma2: float = 0.1295
    n: int = 500
    reps: int = 1000
    seed: int = 0
    f: Optional[Callable] = None
    Lf: float = 0.0
    x_fixed: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError("reps must be at least 1")
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be positive")

    def regression_function(self):
        return self.f if self.f is not None else design_function(self.design_id, self.C)


@dataclass
class McMethod:
    """CI procedure: class and constant it is calibrated to, estimator family,
    optimality criterion and variance mode."""

    family: str = HOLDER
    C: float = 1.0
    p: int = 2
    weights: str = "lp:triangular"
    criterion: str = "flci"
    alpha: float = 0.05
    beta: float = 0.8
    variance: str = "nn:3"

    def smoothness(self):
        return SmoothnessClass(self.family, self.p, self.C)

    def performance(self):
        return PerformanceCriterion(self.criterion, self.alpha, self.beta)


@dataclass
class McResult:
    coverage: float
    coverage_onesided: float
    mean_length: float
    mean_bias: float
    mc_standard_error: float
    reps: int
    per_rep: dict = field(default_factory=dict, repr=False)

    def row(self) -> dict:
        return {"coverage": self.coverage, "coverage_onesided": self.coverage_onesided,
                "mean_length": self.mean_length, "mean_bias": self.mean_bias,
                "mc_se": self.mc_standard_error, "reps": self.reps}


def rng_stream(seed, rep_index) -> np.random.Generator:
    """Counter-based generator for one replication."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(rep_index)])
    return np.random.Generator(np.random.Philox(ss))


def draw_sample(design: McDesign, rep_index, f=None):
    """``(x, y)`` for one replication."""
    rng = rng_stream(design.seed, rep_index)
    n = design.n if design.x_fixed is None else len(design.x_fixed)
    ux = rng.random(n)
    ue = rng.random(n) + 2.0 ** -54  # open interval (0, 1)
    x = 2.0 * ux - 1.0 if design.x_fixed is None else np.asarray(design.x_fixed, float)
    f = f or design.regression_function()
    y = f(x) + math.sqrt(design.sigma2) * ndtri(ue)
    return x, y


def _one_rep(design, method, r, f, cached):
    x, y = draw_sample(design, r, f)
    d = Design.from_arrays(x, y, np.full(x.size, design.sigma2))
    if cached is not None:
        # weights, bias and sd do not depend on y
        order, w, mb, sd, half = cached
        Lhat = w.estimate(y[order])
    else:
        rep = analyze(d, method.smoothness(), method.performance(),
                      family=method.weights, variance_mode=method.variance)
        Lhat, mb, sd, half = rep.Lhat, rep.maxbias, rep.sd, rep.half_length
    z = float(ndtri(1 - method.alpha))
    err = Lhat - design.Lf
    cover = abs(err) <= half
    cover_os = Lhat - mb - sd * z <= design.Lf
    return cover, cover_os, 2.0 * half, err


def _static_weights(design, method, f):
    """Precompute the estimator when nothing in it depends on the outcomes."""
    if design.x_fixed is None or method.variance != "known":
        return None
    x, y = draw_sample(design, 0, f)
    d = Design.from_arrays(x, y, np.full(x.size, design.sigma2))
    rep = analyze(d, method.smoothness(), method.performance(),
                  family=method.weights, variance_mode="known")
    order = np.argsort(x, kind="stable")
    return order, rep.weights, rep.maxbias, rep.sd, rep.half_length


def default_workers():
    return min(8, os.cpu_count() or 1)


def run_mc(design: McDesign, method: McMethod = None, workers=1) -> McResult:
    """Coverage, length and bias of ``method`` over ``design.reps`` draws.

    ``workers > 1`` evaluates replications on a thread pool; results are
    collected by replication index, so the output does not depend on it.
    """
    method = method or McMethod()
    f = design.regression_function()
    cached = _static_weights(design, method, f)
    R = design.reps
    cover = np.zeros(R, dtype=bool)
    cover_os = np.zeros(R, dtype=bool)
    length = np.zeros(R)
    err = np.zeros(R)

    def work(r):
        cover[r], cover_os[r], length[r], err[r] = _one_rep(design, method, r, f, cached)

    if workers <= 1:
        for r in range(R):
            work(r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(work, range(R)))
    cov = float(np.mean(cover))
    return McResult(
        coverage=cov, coverage_onesided=float(np.mean(cover_os)),
        mean_length=float(np.mean(length)), mean_bias=float(np.mean(err)),
        mc_standard_error=math.sqrt(cov * (1 - cov) / R), reps=R,
        per_rep={"cover": cover, "cover_onesided": cover_os, "length": length,
                 "error": err})


def least_favorable_p1(h_plus, h_minus, C, b):
    """Null least favorable function for the Lipschitz class with jump 0:
    ``1{x>=0} b - C h_+ k(x/h_+) 1{x>=0} + C h_- k(x/h_-) 1{x<0}``."""
    def f(x):
        x = np.asarray(x, dtype=float)
        kp = np.maximum(0.0, 1.0 - np.abs(x) / h_plus)
        km = np.maximum(0.0, 1.0 - np.abs(x) / h_minus)
        return np.where(x >= 0, b - C * h_plus * kp, C * h_minus * km)
    return f


__all__ = ["spline_f", "design_function", "McDesign", "McMethod", "McResult",
           "rng_stream", "draw_sample", "run_mc", "least_favorable_p1",
           "DESIGN_KNOTS", "SIGMA2_LEVELS", "TAYLOR", "HOLDER"]
