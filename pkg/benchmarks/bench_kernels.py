"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the median time per call for each kernel and backend, the speedup,
and an end-to-end ``analyze`` timing under each backend (run in a
subprocess so the backend switch takes effect at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np
from scipy.special import ndtri

from honestrd import _kernels_py as py

try:
    from honestrd import _kernels as ext
except ImportError:
    ext = None


def cases(n):
    rng = np.random.default_rng(0)
    x = np.sort(rng.uniform(0, 1, n))
    y = rng.normal(size=n)
    s2 = rng.uniform(0.5, 2, n)
    z = float(ndtri(0.975))
    return {
        "lp_side_weights": lambda m: m.lp_side_weights(x, 0.4, 0, 2),
        "lp_side_stats": lambda m: m.lp_side_stats(x, s2, 0.4, 0, 2),
        "nn_sq_residuals": lambda m: m.nn_sq_residuals(x, y, 3),
        "cv_scalar": lambda m: m.cv_scalar(0.7, 0.05, z),
    }


def per_call(fn, repeat):
    t = timeit.Timer(fn)
    k, _ = t.autorange()
    return float(np.median(t.repeat(repeat, k))) / k


E2E = ("import time, numpy as np, honestrd as h;"
       "x=np.random.default_rng(1).uniform(-1,1,{n}); y=np.sin(3*x)+(x>=0);"
       "d=h.Design.from_arrays(x,y,np.ones(x.size));"
       "c=h.SmoothnessClass('taylor',2,1.0); p=h.PerformanceCriterion();"
       "h.analyze(d,c,p); t=time.perf_counter();"
       "[h.analyze(d,c,p) for _ in range(5)];"
       "print(h.BACKEND, (time.perf_counter()-t)/5)")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=2000)
    args = ap.parse_args()
    print(f"kernels on one side of n={args.n} points; median seconds per call")
    print(f"{'kernel':18s} {'python':>12s} {'compiled':>12s} {'speedup':>8s}")
    for name, fn in cases(args.n).items():
        tp = per_call(lambda: fn(py), args.repeat)
        if ext is None:
            print(f"{name:18s} {tp:12.3e} {'n/a':>12s}")
            continue
        tc = per_call(lambda: fn(ext), args.repeat)
        print(f"{name:18s} {tp:12.3e} {tc:12.3e} {tp / tc:8.1f}")
    print("\nend-to-end analyze (FLCI, local linear, nn:3), seconds per call")
    for flag in ("1", "0"):
        env = dict(os.environ, HONESTRD_PURE_PYTHON=flag)
        r = subprocess.run([sys.executable, "-c", E2E.format(n=args.n)], env=env,
                           capture_output=True, text=True, check=True)
        backend, t = r.stdout.split()
        print(f"{backend:18s} {float(t):12.3e}")


if __name__ == "__main__":
    main()
