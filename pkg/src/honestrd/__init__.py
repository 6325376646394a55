"""Finite-sample optimal confidence intervals for sharp regression
discontinuity designs under Taylor and Hölder smoothness classes."""

__version__ = "0.1.0"

from ._core import BACKEND
from .bias import (check_unbiasedness, nn_residual_variance, prelim_sigma2, sd_known,
                   sd_robust, worst_case_bias_holder2, worst_case_bias_taylor)
from .ci import analyze, criterion_value, flci, one_sided_ci, optimize_smoothing
from .critical import cv, cv_inverse, normal_cdf, normal_quantile
from .design import (HOLDER, TAYLOR, Design, EstimateReport, PerformanceCriterion,
                     SmoothnessClass, WeightSet, validate_design)
from .exceptions import *  # noqa: F401,F403
from .kernels import EPANECHNIKOV, TRIANGULAR, UNIFORM, Kernel, get_kernel
from .lower_bound import (CurvatureStat, IntervalScheme, curvature_stat, default_scheme,
                          lower_ci_C)
from .modulus import (ModulusSolution, asymptotic_efficiencies, coverage_calibration_C,
                      flci_adaptation_efficiency, inverse_modulus, modulus,
                      onesided_adaptation_efficiency)
from .simulation import McDesign, McMethod, McResult, rng_stream, run_mc, spline_f
from .weights import (OptimalCoefficients, g_bC_eval, lp_weights, optimal_weights,
                      solve_optimal_coefficients)
