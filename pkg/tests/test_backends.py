import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import honestrd
from honestrd import _kernels_py as py
from honestrd.kernels import get_kernel

ext = pytest.importorskip("honestrd._kernels")


def sorted_side(rng, n, sign=1):
    x = np.sort(rng.uniform(0, 1, n))
    return x if sign > 0 else -x[::-1]


@pytest.mark.parametrize("kernel", ["triangular", "uniform", "epanechnikov"])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_lp_side_weights_agree(rng, kernel, p):
    code = get_kernel(kernel).code
    for sign in (1, -1):
        x = sorted_side(rng, 200, sign)
        a = ext.lp_side_weights(x, 0.55, code, p)
        b = py.lp_side_weights(x, 0.55, code, p)
        assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_lp_side_stats_agree(rng):
    x = sorted_side(rng, 300)
    s2 = rng.uniform(0.5, 2, 300)
    for h in (0.05, 0.3, 1.2):
        a = ext.lp_side_stats(x, s2, h, 0, 2)
        b = py.lp_side_stats(x, s2, h, 0, 2)
        assert np.allclose(a, b, rtol=1e-12)


def test_singular_side_reported_the_same_way():
    x = np.array([0.1, 0.2, 0.9])
    assert np.isnan(ext.lp_side_weights(x, 0.15, 0, 2)).all()
    assert np.isnan(py.lp_side_weights(x, 0.15, 0, 2)).all()


def test_nn_residuals_agree_with_ties(rng):
    x = np.sort(np.round(rng.uniform(-1, 1, 400), 2))  # many ties
    y = rng.normal(size=x.size)
    for J in (1, 3, 5):
        # same neighbour sets; only the summation order may differ
        assert np.allclose(ext.nn_sq_residuals(x, y, J), py.nn_sq_residuals(x, y, J),
                           rtol=0, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 20), st.sampled_from([0.01, 0.05, 0.1, 0.5]))
def test_cv_scalar_agrees(b, alpha):
    from scipy.special import ndtri
    z = float(ndtri(1 - alpha / 2))
    assert ext.cv_scalar(b, alpha, z) == pytest.approx(py.cv_scalar(b, alpha, z), abs=1e-12)


def test_pure_python_switch():
    code = "import honestrd; print(honestrd.BACKEND)"
    env = dict(os.environ, HONESTRD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    assert honestrd.BACKEND == ("python" if os.environ.get("HONESTRD_PURE_PYTHON") == "1"
                                else "compiled")


def test_end_to_end_identical_reports():
    code = ("import numpy as np, honestrd as h;"
            "x=np.linspace(-1,1,301); y=np.sin(3*x)+(x>=0);"
            "d=h.Design.from_arrays(x,y,np.ones(301));"
            "r=h.analyze(d,h.SmoothnessClass('taylor',2,1.0),h.PerformanceCriterion());"
            "print(repr(r.Lhat), repr(r.half_length), repr(r.h_plus))")
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, HONESTRD_PURE_PYTHON=flag)
        r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        outs.append([float(v) for v in r.stdout.split()])
    assert np.allclose(outs[0], outs[1], rtol=1e-8)
