"""Modulus of continuity for the Taylor class and the efficiency bounds built
on it.

The modulus ``omega(delta)`` is the largest value of ``2 (f(0+) - f(0-))``
over functions in the class with ``sum f(x_i)^2 / sigma2_i <= delta^2 / 4``.
It is computed by inverting ``b -> delta(b) = 2 sqrt(min sum g^2/sigma2)``,
the inverse modulus, which the optimal-weight solver provides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .bias import sd_known, worst_case_bias_taylor
from .ci import _optimize_optimal
from .critical import cv, cv_inverse, normal_quantile
from .design import Design, PerformanceCriterion, SmoothnessClass, WeightSet
from .exceptions import DomainError, NoConvergence
from .weights import OptimalCoefficients, g_bC_eval, solve_optimal_coefficients

QUAD_NODES = 201
QUAD_LOWER = -8.0
SECANT_SCALE = 1e-4
KINK_RTOL = 1e-3


def inverse_modulus(d: Design, cls: SmoothnessClass, b, start=None) -> float:
    """Smallest ``delta`` such that ``omega(delta) >= 2 b``."""
    c = solve_optimal_coefficients(d, cls, b, start=start)
    return 2.0 * math.sqrt(max(c.objective, 0.0))


@dataclass
class ModulusSolution:
    delta: float
    omega: float
    omega_prime: float
    coeffs: OptimalCoefficients
    gstar_values: np.ndarray = field(repr=False)
    kink: bool = False  # left and right secants disagree
    secants: tuple = (math.nan, math.nan)


class ModulusSolver:
    """Evaluates the modulus on one design, reusing solutions as warm starts."""

    def __init__(self, d: Design, cls: SmoothnessClass):
        if cls.C <= 0:
            raise DomainError("the modulus is infinite when C = 0")
        self.d, self.cls = d, cls
        self._last = None

    def delta_of_b(self, b):
        c = solve_optimal_coefficients(self.d, self.cls, b, start=self._last)
        if c.objective > 0:
            self._last = c
        return 2.0 * math.sqrt(max(c.objective, 0.0)), c

    def _bracket(self, delta):
        d, cls = self.d, self.cls
        b = cls.C * float(np.median(np.abs(d.x))) ** cls.p
        if self._last is not None:
            b = self._last.b
        lo = hi = b
        dl, _ = self.delta_of_b(lo)
        if dl >= delta:
            while dl >= delta:
                hi, lo = lo, lo / 2.0
                dl, _ = self.delta_of_b(lo)
        else:
            dh = dl
            while dh < delta:
                lo, hi = hi, hi * 2.0
                dh, _ = self.delta_of_b(hi)
        return lo, hi

    def omega_only(self, delta) -> float:
        if not delta > 0:
            raise DomainError(f"delta must be positive, got {delta}")
        lo, hi = self._bracket(delta)
        b = brentq(lambda t: self.delta_of_b(t)[0] - delta, lo, hi,
                   xtol=1e-15 * hi, rtol=1e-15, maxiter=200)
        return 2.0 * b

    def solve(self, delta, secant_check=False) -> ModulusSolution:
        omega = self.omega_only(delta)
        b = omega / 2.0
        _, coeffs = self.delta_of_b(b)
        d, cls = self.d, self.cls
        g = (g_bC_eval(d.x, "+", coeffs, cls.C, cls.p)
             + g_bC_eval(d.x, "-", coeffs, cls.C, cls.p))
        s_plus = float(np.sum(g[d.plus] / d.sigma2[d.plus]))
        if not s_plus > 0:
            raise NoConvergence("least favorable function vanishes above the cutoff",
                                residual=coeffs.residual)
        # superdifferential element: delta / <K iota, K(g* - f*)> with f* = -g*
        omega_prime = delta / (2.0 * s_plus)
        kink, secants = False, (math.nan, math.nan)
        if secant_check:
            eps = SECANT_SCALE * delta
            left = (omega - self.omega_only(delta - eps)) / eps
            right = (self.omega_only(delta + eps) - omega) / eps
            secants = (left, right)
            kink = abs(left - right) > KINK_RTOL * max(abs(left), abs(right))
            self._last = coeffs
        return ModulusSolution(delta, omega, omega_prime, coeffs, g, kink, secants)


def modulus(d: Design, cls: SmoothnessClass, delta, secant_check=False) -> ModulusSolution:
    return ModulusSolver(d, cls).solve(delta, secant_check=secant_check)


def _gauss_legendre(a, b, n=QUAD_NODES):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def _phi(t):
    return np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)


def onesided_efficiency_from(omega, omega_prime, alpha=0.05, beta=0.8) -> float:
    """``omega(2 d) / (omega(d) + d omega'(d))`` at ``d = z_beta + z_{1-alpha}``."""
    db = normal_quantile(beta) + normal_quantile(1 - alpha)
    return omega(2 * db) / (omega(db) + db * omega_prime(db))


def flci_efficiency_from(omega, half_length_opt, alpha=0.05) -> float:
    """Expected length of the shortest CI at a constant function over the
    length of the shortest fixed-length CI.

    ``omega`` is vectorized over the quadrature nodes via a Python loop;
    ``half_length_opt`` is the optimal FLCI half-length.
    """
    z = normal_quantile(1 - alpha)
    t, w = _gauss_legendre(QUAD_LOWER, z)
    vals = np.array([omega(2 * (z - ti)) for ti in t])
    num = float(np.sum(w * vals * _phi(t)))
    return num / (2.0 * half_length_opt)


def onesided_adaptation_efficiency(d: Design, cls: SmoothnessClass, alpha=0.05,
                                   beta=0.8) -> float:
    solver = ModulusSolver(d, cls)
    db = normal_quantile(beta) + normal_quantile(1 - alpha)
    s1 = solver.solve(db)
    om2 = solver.omega_only(2 * db)
    return om2 / (s1.omega + db * s1.omega_prime)


def optimal_flci_half_length(d: Design, cls: SmoothnessClass, alpha=0.05) -> float:
    """``min over delta of cv(omega/(2 omega') - delta/2) omega'``, searched over
    the optimal-weight family."""
    w = _optimize_optimal(d, cls, PerformanceCriterion("flci", alpha))
    sd = sd_known(w, d)
    return cv(worst_case_bias_taylor(w, cls.C, cls.p, d) / sd, alpha) * sd


def flci_adaptation_efficiency(d: Design, cls: SmoothnessClass, alpha=0.05) -> float:
    solver = ModulusSolver(d, cls)
    z = normal_quantile(1 - alpha)
    t, w = _gauss_legendre(QUAD_LOWER, z)
    # increasing delta order keeps warm starts close
    vals = np.empty(t.size)
    for i in np.argsort(-t):
        vals[i] = solver.omega_only(2 * (z - t[i]))
    num = float(np.sum(w * vals * _phi(t)))
    return num / (2.0 * optimal_flci_half_length(d, cls, alpha))


def _flci_asym_denominator(r, alpha):
    """``inf_delta cv((delta/2)(1/r - 1)) delta^(r-1)``."""
    if r == 1:
        return cv(0.0, alpha)

    def f(logd):
        dd = math.exp(logd)
        return cv(0.5 * dd * (1.0 / r - 1.0), alpha) * dd ** (r - 1.0)

    grid = np.linspace(math.log(1e-2), math.log(1e3), 200)
    vals = [f(g) for g in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return min(float(res.fun), vals[i])


def asymptotic_efficiencies(r, alpha=0.05):
    """Limits of the one-sided and fixed-length efficiency bounds when
    ``omega(delta)`` is proportional to ``delta^r``. Returns ``(onesided, flci)``."""
    if not 0 < r <= 1:
        raise DomainError(f"rate r must lie in (0, 1], got {r}")
    onesided = 2.0 ** r / (1.0 + r)
    z = normal_quantile(1 - alpha)
    t, w = _gauss_legendre(QUAD_LOWER, z)
    num = 2.0 ** r * float(np.sum(w * (z - t) ** r * _phi(t)))
    flci_eff = num / (2.0 * r * _flci_asym_denominator(r, alpha))
    return onesided, flci_eff


def coverage_calibration_C(d: Design, w: WeightSet, alpha_nominal=0.05,
                           alpha_true=0.10, p=2) -> float:
    """Largest ``C`` for which the nominal ``1 - alpha_nominal`` interval
    ``Lhat +- z sd`` still covers with probability ``1 - alpha_true``."""
    if not alpha_true >= alpha_nominal:
        raise DomainError("alpha_true must be at least alpha_nominal")
    t = cv_inverse(normal_quantile(1 - alpha_nominal / 2), alpha_true)
    A = float(np.sum(np.abs(w.combined) * np.abs(d.x) ** p))
    return t * sd_known(w, d) / A
