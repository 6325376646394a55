"""Backend selection for the hot kernels.

Uses the compiled extension when it is importable, the numpy fallback
otherwise. Setting ``HONESTRD_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("HONESTRD_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        pass

lp_side_weights = _impl.lp_side_weights
lp_side_stats = _impl.lp_side_stats
nn_sq_residuals = _impl.nn_sq_residuals
cv_scalar = _impl.cv_scalar
