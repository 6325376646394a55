"""Estimator weights: local polynomial weights for any kernel, and the
finite-sample optimal weights built from the least favorable function.

For a jump parameter ``b`` the least favorable function on each side is a
soft-thresholded polynomial,

    g_+(x) =  soft(b - b_minus + sum_j d_plus[j] x^j,  C|x|^p),   x >= 0
    g_-(x) = -soft(b_minus     + sum_j d_minus[j] x^j, C|x|^p),   x <  0

with ``soft(t, lam) = sign(t) * max(|t| - lam, 0)``. The coefficients
minimize ``sum g(x_i)^2 / sigma2_i``, a convex and continuously
differentiable function of ``(b_minus, d_plus, d_minus)``, which we minimize
by semismooth Newton. The optimal weights are ``g / sigma2`` normalized to
sum to one on each side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _core
from ._kernels_py import lp_weights_from_kw
from .design import TAYLOR, Design, SmoothnessClass, WeightSet
from .exceptions import (DomainError, NoConvergence, NonpositiveBandwidth,
                         NumericError, SingularMomentMatrix)
from .kernels import TRIANGULAR, get_kernel

SOLVER_TOL = 1e-12


def lp_weights(d: Design, h_plus, h_minus, kernel=TRIANGULAR, p=2) -> WeightSet:
    """Local polynomial (order ``p - 1``) intercept weights on each side."""
    if not (h_plus > 0 and h_minus > 0):
        raise NonpositiveBandwidth(
            f"bandwidths must be positive, got {h_plus}, {h_minus}")
    kern = get_kernel(kernel)
    plus = d.plus
    xp, xm = d.x[plus], d.x[~plus]
    if kern.code >= 0:
        wp = _core.lp_side_weights(xp, float(h_plus), kern.code, int(p))
        wm = _core.lp_side_weights(xm, float(h_minus), kern.code, int(p))
    else:
        wp = lp_weights_from_kw(xp, kern(xp / h_plus), h_plus, p)
        wm = lp_weights_from_kw(xm, kern(xm / h_minus), h_minus, p)
    if np.isnan(wp).any() or np.isnan(wm).any():
        side = "above" if np.isnan(wp).any() else "below"
        raise SingularMomentMatrix(
            f"fewer than {p} distinct points inside the bandwidth {side} the cutoff")
    w_plus = np.zeros(d.n)
    w_minus = np.zeros(d.n)
    w_plus[plus] = wp
    w_minus[~plus] = wm
    return WeightSet(w_plus, w_minus, float(h_plus), float(h_minus),
                     family="lp", kernel=kern.name)


def gls_weights(d: Design, p) -> WeightSet:
    """Side-wise polynomial GLS intercept weights (``1/sigma2`` weighting)."""
    plus = d.plus
    w_plus = np.zeros(d.n)
    w_minus = np.zeros(d.n)
    for mask, out in ((plus, w_plus), (~plus, w_minus)):
        x = d.x[mask]
        w = lp_weights_from_kw(x, 1.0 / d.sigma2[mask], np.max(np.abs(x)), p)
        if np.isnan(w).any():
            raise SingularMomentMatrix(f"fewer than {p} distinct points on a side")
        out[mask] = w
    return WeightSet(w_plus, w_minus, np.inf, np.inf, family="optimal")


@dataclass(frozen=True)
class OptimalCoefficients:
    b: float
    b_minus: float
    d_plus: np.ndarray
    d_minus: np.ndarray
    objective: float = np.nan  # sum g^2 / sigma2 at the solution
    residual: float = np.nan   # stationarity residual, scale free
    iterations: int = 0


def _soft(t, lam):
    return np.sign(t) * np.maximum(np.abs(t) - lam, 0.0)


def g_bC_eval(x, side, coeffs: OptimalCoefficients, C, p):
    """Least favorable function on one side of the cutoff.

    ``side`` is ``"+"`` or ``"-"``; values on the wrong side are 0.
    """
    x = np.asarray(x, dtype=float)
    lam = C * np.abs(x) ** p
    if side == "+":
        poly = coeffs.b - coeffs.b_minus + _poly(coeffs.d_plus, x)
        return np.where(x >= 0, _soft(poly, lam), 0.0)
    poly = coeffs.b_minus + _poly(coeffs.d_minus, x)
    return np.where(x < 0, -_soft(poly, lam), 0.0)


def _poly(d, x):
    out = np.zeros_like(x)
    for j, c in enumerate(d, start=1):
        out = out + c * x ** j
    return out


class _Problem:
    """The inverse-modulus objective in scaled coordinates ``u = x / scale``."""

    def __init__(self, d: Design, C, p, b):
        self.p, self.C, self.b = p, C, b
        self.scale = float(np.max(np.abs(d.x)))
        u = d.x / self.scale
        self.plus = d.plus
        self.inv_s2 = 1.0 / d.sigma2
        self.lam = C * np.abs(d.x) ** p
        k = p - 1
        Z = np.zeros((d.n, 1 + 2 * k))
        Z[:, 0] = np.where(self.plus, -1.0, 1.0)
        for j in range(1, p):
            Z[self.plus, j] = u[self.plus] ** j
            Z[~self.plus, k + j] = u[~self.plus] ** j
        self.Z = Z
        self.c = np.where(self.plus, b, 0.0)

    def t(self, theta):
        return self.c + self.Z @ theta

    def value(self, theta):
        r = np.maximum(np.abs(self.t(theta)) - self.lam, 0.0)
        return float(np.sum(r * r * self.inv_s2))

    def grad_hess(self, theta):
        t = self.t(theta)
        s = _soft(t, self.lam) * self.inv_s2
        grad = 2.0 * self.Z.T @ s
        act = (np.abs(t) > self.lam) * self.inv_s2
        hess = 2.0 * (self.Z * act[:, None]).T @ self.Z
        return grad, hess, t

    def g(self, theta):
        """Least favorable values ``g(x_i)`` (negative sign below cutoff)."""
        s = _soft(self.t(theta), self.lam)
        return np.where(self.plus, s, -s)

    def residual(self, theta):
        g = self.g(theta) * self.inv_s2
        Sp = np.sum(g[self.plus])
        Sm = np.sum(g[~self.plus])
        if Sp <= 0 or Sm >= 0:
            return np.inf
        res = [abs(Sp + Sm) / Sp]
        Zp = self.Z[self.plus]
        Zm = self.Z[~self.plus]
        k = self.p - 1
        for j in range(1, self.p):
            res.append(abs(Zp[:, j] @ g[self.plus]) / Sp)
            res.append(abs(Zm[:, k + j] @ g[~self.plus]) / -Sm)
        return max(res)

    def to_coeffs(self, theta, iterations=0):
        k = self.p - 1
        pw = self.scale ** np.arange(1, self.p)
        return OptimalCoefficients(
            b=self.b, b_minus=float(theta[0]),
            d_plus=np.asarray(theta[1:1 + k]) / pw,
            d_minus=np.asarray(theta[1 + k:]) / pw,
            objective=self.value(theta), residual=self.residual(theta),
            iterations=iterations)

    def theta_from(self, coeffs: OptimalCoefficients):
        pw = self.scale ** np.arange(1, self.p)
        return np.concatenate([[coeffs.b_minus], coeffs.d_plus * pw,
                               coeffs.d_minus * pw])


def _scaled_grad(prob: _Problem, theta):
    grad, hess, t = prob.grad_hess(theta)
    # gradient relative to the size of its summands (basis entries are <= 1)
    scale = 2.0 * np.sum(np.abs(_soft(t, prob.lam)) * prob.inv_s2)
    g = np.max(np.abs(grad)) / scale if scale > 0 else 0.0
    return g, grad, hess


def _newton(prob: _Problem, theta, maxiter=200):
    f = prob.value(theta)
    gs, grad, hess = _scaled_grad(prob, theta)
    for it in range(1, maxiter + 1):
        if f == 0.0 or gs <= SOLVER_TOL * 1e-2:
            return theta, it
        # Levenberg damping keeps the step defined when few points are active
        mu = 1e-12 * max(np.max(np.abs(np.diag(hess))), 1e-300)
        while True:
            try:
                step = np.linalg.solve(hess + mu * np.eye(hess.shape[0]), -grad)
                break
            except np.linalg.LinAlgError:
                mu *= 100.0
        slope = grad @ step
        alpha = 1.0
        while True:
            cand = theta + alpha * step
            fc = prob.value(cand)
            if fc <= f + 1e-4 * alpha * slope or alpha < 1e-12:
                break
            alpha *= 0.5
        if fc < f:
            theta, f = cand, fc
            gs, grad, hess = _scaled_grad(prob, theta)
            continue
        # the objective cannot resolve the improvement; judge the full
        # Newton step by the gradient instead
        cand = theta + step
        fc = prob.value(cand)
        if fc > f * (1 + 1e-12):
            return theta, it
        gs_c, grad_c, hess_c = _scaled_grad(prob, cand)
        if not gs_c < gs:
            return theta, it
        theta, f, gs, grad, hess = cand, fc, gs_c, grad_c, hess_c
    raise NoConvergence(f"Newton solver did not converge in {maxiter} steps",
                        residual=prob.residual(theta))


def _solve_p1(d: Design, C, b):
    """Closed form for p = 1: triangular shapes with bandwidths
    ``h_plus + h_minus = b / C`` balanced so both sides carry equal mass."""
    inv = 1.0 / d.sigma2
    ax = np.abs(d.x)
    plus = d.plus
    B = b / C

    def phi(hp):
        hm = B - hp
        return (np.sum(np.maximum(hp - ax[plus], 0.0) * inv[plus])
                - np.sum(np.maximum(hm - ax[~plus], 0.0) * inv[~plus]))

    lo, hi = 0.0, B
    for _ in range(200):
        # phi is piecewise linear; once both ends share an active set the
        # root solves a linear equation exactly
        act_lo_p = ax[plus] < lo
        act_hi_p = ax[plus] < hi
        act_lo_m = ax[~plus] < B - lo
        act_hi_m = ax[~plus] < B - hi
        if (np.array_equal(act_lo_p, act_hi_p)
                and np.array_equal(act_lo_m, act_hi_m)):
            Ap = np.sum(inv[plus][act_lo_p])
            Am = np.sum(inv[~plus][act_lo_m])
            if Ap + Am > 0:
                num = (np.sum((ax[plus] * inv[plus])[act_lo_p]) + B * Am
                       - np.sum((ax[~plus] * inv[~plus])[act_lo_m]))
                hp = min(max(num / (Ap + Am), lo), hi)
            else:
                hp = 0.5 * (lo + hi)
            return hp, B - hp
        mid = 0.5 * (lo + hi)
        if phi(mid) < 0:
            lo = mid
        else:
            hi = mid
    hp = 0.5 * (lo + hi)
    return hp, B - hp


def solve_optimal_coefficients(d: Design, cls: SmoothnessClass, b, start=None,
                               method="auto") -> OptimalCoefficients:
    """Coefficients ``(b_minus, d_plus, d_minus)`` of the least favorable
    function with jump ``b``.

    ``method`` is ``"auto"`` (closed form for p = 1, Newton otherwise),
    ``"closed"`` or ``"newton"``. ``start`` warm-starts the Newton solver.
    """
    if cls.family != TAYLOR:
        raise DomainError("optimal weights are only available for the Taylor class")
    if not b > 0:
        raise DomainError(f"jump parameter b must be positive, got {b}")
    p, C = cls.p, cls.C
    prob = _Problem(d, C, p, b)
    if method == "closed" or (method == "auto" and p == 1 and C > 0):
        if p != 1 or C == 0:
            raise DomainError("closed form needs p = 1 and C > 0")
        hp, hm = _solve_p1(d, C, b)
        return prob.to_coeffs(np.array([C * hm]))
    if start is not None:
        theta = prob.theta_from(start)
    else:
        theta = np.zeros(1 + 2 * (p - 1))
        theta[0] = 0.5 * b
    theta, it = _newton(prob, theta)
    return prob.to_coeffs(theta, it)


def weights_from_coefficients(d: Design, cls: SmoothnessClass,
                              coeffs: OptimalCoefficients) -> WeightSet:
    p, C = cls.p, cls.C
    gp = g_bC_eval(d.x, "+", coeffs, C, p) / d.sigma2
    gm = g_bC_eval(d.x, "-", coeffs, C, p) / d.sigma2
    Sp, Sm = gp.sum(), gm.sum()
    if not (Sp > 0 and Sm < 0):
        raise NumericError(
            f"least favorable function vanishes at the design points for b={coeffs.b:g}")
    bp = coeffs.b - coeffs.b_minus
    bm = coeffs.b_minus
    h_plus = (bp / C) ** (1.0 / p) if C > 0 and bp > 0 else np.nan
    h_minus = (bm / C) ** (1.0 / p) if C > 0 and bm > 0 else np.nan
    return WeightSet(gp / Sp, gm / Sm, h_plus, h_minus, family="optimal",
                     extra={"b": coeffs.b, "coeffs": coeffs})


def optimal_weights(d: Design, cls: SmoothnessClass, b, start=None,
                    method="auto") -> WeightSet:
    """Finite-sample optimal weights for the jump parameter ``b``."""
    if cls.family != TAYLOR:
        raise DomainError("optimal weights are only available for the Taylor class")
    if cls.C == 0:
        return gls_weights(d, cls.p)
    coeffs = solve_optimal_coefficients(d, cls, b, start=start, method=method)
    return weights_from_coefficients(d, cls, coeffs)
