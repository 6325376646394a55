import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from honestrd import (TAYLOR, HOLDER, Design, PerformanceCriterion, SmoothnessClass, analyze,
                      criterion_value, flci, lp_weights, one_sided_ci, optimize_smoothing)
from honestrd.ci import bandwidth_grid, criterion_from, parse_variance_mode
from honestrd.exceptions import DomainError

from conftest import grid_design, random_design

FLCI = PerformanceCriterion("flci")
MSE = PerformanceCriterion("mse")
EXCESS = PerformanceCriterion("excess", 0.05, 0.8)


def test_one_sided_arithmetic():
    assert one_sided_ci(7.0, 1.0, 1.0, 0.05) == pytest.approx(7 - 1 - 1.6448536269514722)
    assert one_sided_ci(7.0, 0.0, 2.0, 0.05) == pytest.approx(7 - 2 * 1.6448536269514722)


def test_flci_table_values():
    half, (lo, hi) = flci(0.0, 0.0, 1.0, 0.05)
    assert half == pytest.approx(1.960, abs=1e-3) and (lo, hi) == (-half, half)
    half, _ = flci(3.0, 2.0, 2.0, 0.05)
    assert half / 2.0 == pytest.approx(2.646, abs=1e-3)


def test_criterion_arithmetic():
    assert criterion_from(3.0, 4.0, MSE) == 25.0
    assert criterion_from(0.5, 2.0, EXCESS) == pytest.approx(1.0 + 2.0 * (1.6448536 + 0.8416212), abs=1e-6)
    assert criterion_from(0.0, 1.0, FLCI) == pytest.approx(2 * 1.959964, abs=1e-6)


def test_criterion_value_uses_class():
    d = grid_design(100)
    w = lp_weights(d, 0.5, 0.5)
    t = criterion_value(w, SmoothnessClass(TAYLOR, 2, 1.0), d, MSE)
    h = criterion_value(w, SmoothnessClass(HOLDER, 2, 1.0), d, MSE)
    assert h <= t


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 5), st.floats(0.01, 5), st.floats(0, 1), st.floats(0, 1))
def test_flci_monotone_and_dominates_one_sided(b, s, db, ds):
    half, _ = flci(0.0, b, s)
    assert half >= b + s * 1.6448536269514722 - 1e-12
    assert flci(0.0, b + db, s)[0] >= half - 1e-12
    assert flci(0.0, b, s + ds)[0] >= half - 1e-12


def test_zero_C_oversmooths_to_the_largest_bandwidth():
    d = grid_design(80)
    rep = optimize_smoothing(d, SmoothnessClass(TAYLOR, 2, 0.0), FLCI)
    assert rep.h_plus == pytest.approx(1.0) and rep.h_minus == pytest.approx(1.0)
    assert rep.maxbias == 0.0


def test_mse_bandwidth_scales_as_cube_root():
    cls = SmoothnessClass(TAYLOR, 1, 1.0)
    h1 = optimize_smoothing(grid_design(500), cls, MSE).h_plus
    h8 = optimize_smoothing(grid_design(4000), cls, MSE).h_plus
    assert h8 / h1 == pytest.approx(0.5, rel=0.1)


def test_flci_bandwidth_at_least_mse_bandwidth():
    d = grid_design(400)
    cls = SmoothnessClass(TAYLOR, 2, 1.0)
    hf = optimize_smoothing(d, cls, FLCI).h_plus
    hm = optimize_smoothing(d, cls, MSE).h_plus
    step = np.diff(np.log(bandwidth_grid(np.abs(d.x[d.x >= 0]), 2, 1.0)))[0]
    assert hf >= hm * np.exp(-step)


def test_search_beats_every_grid_point(rng):
    d = random_design(rng, 200)
    cls = SmoothnessClass(TAYLOR, 2, 1.0)
    rep = optimize_smoothing(d, cls, FLCI)
    for h in bandwidth_grid(np.abs(d.x[d.x >= 0]), 2, 1.0)[::6]:
        try:
            w = lp_weights(d, h, h)
        except Exception:
            continue
        assert rep.criterion_value <= criterion_value(w, cls, d, FLCI) + 1e-12


def test_optimal_family_beats_local_linear(rng):
    for _ in range(3):
        d = random_design(rng, 150)
        cls = SmoothnessClass(TAYLOR, 2, 1.0)
        lp = optimize_smoothing(d, cls, FLCI, "lp:triangular")
        opt = optimize_smoothing(d, cls, FLCI, "optimal")
        assert opt.criterion_value <= lp.criterion_value * (1 + 1e-9)
        assert opt.criterion_value >= 0.9 * lp.criterion_value


def test_search_is_deterministic(rng):
    d = random_design(rng, 150)
    cls = SmoothnessClass(TAYLOR, 2, 1.0)
    a = optimize_smoothing(d, cls, EXCESS)
    b = optimize_smoothing(d, cls, EXCESS)
    assert (a.h_plus, a.h_minus) == (b.h_plus, b.h_minus)


def test_noise_free_linear_data_recovers_jump():
    x = np.linspace(-1, 1, 60)
    d = Design.from_arrays(x, np.where(x >= 0, 2.5, 0.0) + 0.7 * x, np.ones(60))
    rep = analyze(d, SmoothnessClass(TAYLOR, 2, 1.0), FLCI, variance_mode="known")
    assert rep.Lhat == pytest.approx(2.5, abs=1e-12)
    assert rep.ci_lower <= 2.5 <= rep.ci_upper
    assert rep.onesided_lower <= 2.5 <= rep.onesided_upper


def test_report_fields_are_consistent(rng):
    d = random_design(rng, 300, y=None)
    rep = analyze(d, SmoothnessClass(TAYLOR, 2, 1.0), FLCI, variance_mode="ehw")
    assert rep.ci_upper - rep.ci_lower == pytest.approx(2 * rep.half_length)
    assert rep.criterion_value == pytest.approx(2 * rep.half_length)
    assert rep.onesided_lower == pytest.approx(
        rep.Lhat - rep.maxbias - rep.sd * 1.6448536269514722)
    out = rep.to_dict()
    assert set(out) >= {"estimate", "maxbias", "sd", "ci", "h_plus", "h_minus", "criterion"}


def test_fixed_bandwidth_and_variance_modes():
    d = grid_design(100)
    rep = analyze(d, SmoothnessClass(TAYLOR, 2, 1.0), FLCI, variance_mode="nn:2",
                  fixed_h=(0.5, 0.4))
    assert (rep.h_plus, rep.h_minus) == (0.5, 0.4)
    assert parse_variance_mode("nn:5") == ("nn", 5)
    for bad in ("nn:0", "robust"):
        with pytest.raises(DomainError):
            parse_variance_mode(bad)
    with pytest.raises(DomainError):
        analyze(d, SmoothnessClass(TAYLOR, 2, 1.0), FLCI, family="optimal", fixed_h=(0.5, 0.5))
