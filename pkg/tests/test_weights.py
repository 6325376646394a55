import numpy as np
import pytest
from scipy.optimize import brentq, minimize

from honestrd import (TAYLOR, Design, SmoothnessClass, check_unbiasedness, lp_weights,
                      optimal_weights, solve_optimal_coefficients)
from honestrd.exceptions import DomainError, NonpositiveBandwidth, SingularMomentMatrix
from honestrd.weights import OptimalCoefficients, g_bC_eval, gls_weights

from conftest import grid_design, random_design


def wls_intercept_weights(x, k, p):
    """Row of (X'KX)^{-1} X'K for the intercept, via lstsq on sqrt(K) X."""
    keep = k > 0
    X = np.vander(x[keep], p, increasing=True)
    s = np.sqrt(k[keep])
    pinv = np.linalg.pinv(X * s[:, None])
    out = np.zeros_like(x)
    out[keep] = pinv[0] * s
    return out


@pytest.mark.parametrize("kernel,kfun", [
    ("triangular", lambda u: np.maximum(0, 1 - np.abs(u))),
    ("uniform", lambda u: (np.abs(u) <= 1) * 0.5),
    ("epanechnikov", lambda u: np.maximum(0, 0.75 * (1 - u * u))),
])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_lp_weights_match_dense_wls(rng, kernel, kfun, p):
    d = random_design(rng, 150)
    w = lp_weights(d, 0.6, 0.45, kernel, p)
    x = d.x
    for mask, h, got in ((x >= 0, 0.6, w.w_plus), (x < 0, 0.45, w.w_minus)):
        want = np.zeros_like(x)
        want[mask] = wls_intercept_weights(x[mask], kfun(x[mask] / h), p)
        assert np.allclose(got, want, atol=1e-12)


def test_lp_weights_invariants(rng):
    d = random_design(rng, 80)
    w = lp_weights(d, 0.7, 0.7, p=2)
    assert w.w_plus.sum() == pytest.approx(1.0)
    assert w.w_minus.sum() == pytest.approx(1.0)
    assert np.all(w.w_plus[d.x < 0] == 0) and np.all(w.w_minus[d.x >= 0] == 0)
    assert check_unbiasedness(w, 2, d) < 1e-12
    assert w.estimate(np.where(d.x >= 0, 3.0, 1.0) + 2 * d.x) == pytest.approx(2.0)


def test_lp_weights_errors():
    d = grid_design(20)
    with pytest.raises(NonpositiveBandwidth):
        lp_weights(d, 0.0, 0.5)
    with pytest.raises(SingularMomentMatrix):
        lp_weights(d, 0.06, 0.5, p=3)


def p1_oracle(d, C, b):
    """Triangular-shape weights with h_+ + h_- = b/C and equal 1/sigma2-weighted
    kernel mass on both sides, solved by brentq."""
    ax, inv, plus = np.abs(d.x), 1 / d.sigma2, d.x >= 0
    B = b / C

    def mass(h, m):
        return np.sum(np.maximum(h - ax[m], 0) * inv[m])

    hp = brentq(lambda h: mass(h, plus) - mass(B - h, ~plus), 0, B, xtol=1e-15, rtol=1e-15)
    hm = B - hp
    kp = np.where(plus, np.maximum(0, 1 - ax / hp), 0) * inv
    km = np.where(~plus, np.maximum(0, 1 - ax / hm), 0) * inv
    return kp / kp.sum(), km / km.sum(), hp, hm


def test_p1_closed_form_matches_balance_oracle(rng):
    for _ in range(25):
        d = random_design(rng, int(rng.integers(20, 300)))
        C = float(rng.uniform(0.2, 3.0))
        b = float(C * rng.uniform(0.5, 1.5))
        w = optimal_weights(d, SmoothnessClass(TAYLOR, 1, C), b)
        wp, wm, hp, hm = p1_oracle(d, C, b)
        assert np.max(np.abs(w.w_plus - wp)) <= 1e-10
        assert np.max(np.abs(w.w_minus - wm)) <= 1e-10
        assert w.h_plus == pytest.approx(hp, rel=1e-9)


def test_p1_newton_agrees_with_closed_form(rng):
    d = random_design(rng, 120)
    cls = SmoothnessClass(TAYLOR, 1, 1.0)
    a = optimal_weights(d, cls, 0.8, method="closed")
    n = optimal_weights(d, cls, 0.8, method="newton")
    assert np.allclose(a.combined, n.combined, atol=1e-9)


def objective(d, C, p, b, theta):
    c = OptimalCoefficients(b, theta[0], np.asarray(theta[1:p]), np.asarray(theta[p:]))
    g = g_bC_eval(d.x, "+", c, C, p) + g_bC_eval(d.x, "-", c, C, p)
    return float(np.sum(g * g / d.sigma2))


@pytest.mark.parametrize("p", [2, 3])
def test_newton_matches_generic_minimizer(rng, p):
    d = random_design(rng, 200)
    C, b = 1.0, 0.4
    c = solve_optimal_coefficients(d, SmoothnessClass(TAYLOR, p, C), b)
    res = minimize(lambda t: objective(d, C, p, b, t), np.r_[0.5 * b, np.zeros(2 * (p - 1))],
                   method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 40000, "maxfev": 40000})
    assert c.objective <= res.fun * (1 + 1e-9)
    assert c.objective == pytest.approx(res.fun, rel=1e-6)
    assert c.residual <= 1e-10


def test_optimal_weights_are_unbiased_for_low_order_polynomials(rng):
    d = random_design(rng, 250)
    for p in (2, 3):
        w = optimal_weights(d, SmoothnessClass(TAYLOR, p, 1.0), 0.3)
        assert check_unbiasedness(w, p, d) < 1e-9
        assert w.w_plus.sum() == pytest.approx(1.0) and w.w_minus.sum() == pytest.approx(1.0)


def test_optimal_weights_are_stationary_under_perturbation(rng):
    # moving along a moment-preserving direction cannot lower the objective
    d = grid_design(100)
    C, p, b = 1.0, 2, 0.3
    c = solve_optimal_coefficients(d, SmoothnessClass(TAYLOR, p, C), b)
    theta = np.r_[c.b_minus, c.d_plus, c.d_minus]
    f0 = objective(d, C, p, b, theta)
    for _ in range(20):
        e = rng.normal(size=theta.size) * 1e-4
        assert objective(d, C, p, b, theta + e) >= f0 * (1 - 1e-12)


def test_zero_C_gives_gls():
    d = grid_design(60)
    w = optimal_weights(d, SmoothnessClass(TAYLOR, 2, 0.0), 1.0)
    g = gls_weights(d, 2)
    assert np.allclose(w.combined, g.combined)
    # homoskedastic GLS = ordinary least squares line on each side
    x = d.x[d.x >= 0]
    assert np.allclose(w.w_plus[d.x >= 0], wls_intercept_weights(x, np.ones_like(x), 2))


def test_holder_class_rejected():
    d = grid_design(40)
    with pytest.raises(DomainError):
        optimal_weights(d, SmoothnessClass("holder", 2, 1.0), 0.5)
    with pytest.raises(DomainError):
        solve_optimal_coefficients(d, SmoothnessClass(TAYLOR, 2, 1.0), 0.0)


def test_warm_start_reaches_same_solution(rng):
    d = random_design(rng, 150)
    cls = SmoothnessClass(TAYLOR, 2, 1.0)
    a = solve_optimal_coefficients(d, cls, 0.5)
    b = solve_optimal_coefficients(d, cls, 0.5, start=solve_optimal_coefficients(d, cls, 0.2))
    assert b.objective == pytest.approx(a.objective, rel=1e-12)
