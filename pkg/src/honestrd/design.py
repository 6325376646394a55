"""Shared domain types: the observed sample, the smoothness class, weight sets
and estimate reports.

The cutoff is always 0. Observations with ``x == 0`` belong to the treated
(right) side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DomainError, EmptySide, LengthMismatch, NonpositiveVariance

TAYLOR = "taylor"
HOLDER = "holder"

CRITERIA = ("flci", "excess", "mse")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Design:
    """Fixed-design sample ``y_i = f(x_i) + u_i`` with ``var(u_i) = sigma2_i``.

    ``sigma2_kind`` records where the variances came from: ``"known"``,
    ``"estimated"`` or ``"assumed"`` (placeholder until a variance estimate
    replaces it).
    """

    x: np.ndarray
    y: np.ndarray
    sigma2: np.ndarray
    sigma2_kind: str = "known"

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "y", _frozen(self.y))
        object.__setattr__(self, "sigma2", _frozen(self.sigma2))

    @classmethod
    def from_arrays(cls, x, y, sigma2=None, sigma2_kind=None) -> "Design":
        x = np.asarray(x, dtype=float)
        if sigma2 is None:
            return cls(x, y, np.ones_like(x), sigma2_kind or "assumed")
        sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), x.shape)
        return cls(x, y, sigma2, sigma2_kind or "known")

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def plus(self) -> np.ndarray:
        """Boolean mask of treated observations (``x >= 0``)."""
        return self.x >= 0

    @property
    def minus(self) -> np.ndarray:
        return self.x < 0

    def with_sigma2(self, sigma2, kind="estimated") -> "Design":
        sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), self.x.shape)
        return Design(self.x, self.y, sigma2, kind)

    def with_y(self, y) -> "Design":
        return Design(self.x, y, self.sigma2, self.sigma2_kind)


def validate_design(d: Design) -> Design:
    """Check the invariants of ``d`` and return it sorted by ``x``.

    The sort is stable, so tied running-variable values keep their input
    order. Calling this on an already validated design returns an equal
    design.
    """
    x, y, s2 = d.x, d.y, d.sigma2
    if x.ndim != 1 or y.shape != x.shape or s2.shape != x.shape:
        raise LengthMismatch(
            f"x, y and sigma2 must be 1-d of equal length, got "
            f"{x.shape}, {y.shape}, {s2.shape}")
    if x.size < 2:
        raise LengthMismatch("need at least 2 observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))
            and np.all(np.isfinite(s2))):
        raise DomainError("x, y and sigma2 must be finite")
    if np.any(s2 <= 0):
        i = int(np.flatnonzero(s2 <= 0)[0])
        raise NonpositiveVariance(f"sigma2[{i}] = {s2[i]} is not positive")
    if not np.any(x >= 0):
        raise EmptySide("no observations at or above the cutoff")
    if not np.any(x < 0):
        raise EmptySide("no observations below the cutoff")
    order = np.argsort(x, kind="stable")
    return Design(x[order], y[order], s2[order], d.sigma2_kind)


@dataclass(frozen=True)
class SmoothnessClass:
    """Taylor class F_RDT,p(C) or second-order Hölder class F_RDH,2(C)."""

    family: str = TAYLOR
    p: int = 2
    C: float = 1.0

    def __post_init__(self):
        if self.family not in (TAYLOR, HOLDER):
            raise DomainError(f"unknown smoothness family {self.family!r}")
        if int(self.p) != self.p or self.p < 1:
            raise DomainError(f"order p must be a positive integer, got {self.p}")
        if not self.C >= 0:
            raise DomainError(f"C must be nonnegative, got {self.C}")
        if self.family == HOLDER and self.p != 2:
            raise DomainError("the Hölder class is only defined for p = 2")


@dataclass(frozen=True)
class PerformanceCriterion:
    """What the smoothing parameters are chosen to minimize.

    ``kind`` is ``"flci"`` (two-sided fixed-length CI length), ``"excess"``
    (worst-case ``beta`` quantile of one-sided excess length) or ``"mse"``
    (worst-case mean squared error).
    """

    kind: str = "flci"
    alpha: float = 0.05
    beta: float = 0.8

    def __post_init__(self):
        if self.kind not in CRITERIA:
            raise DomainError(f"unknown criterion {self.kind!r}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")


@dataclass(frozen=True, eq=False)
class WeightSet:
    """Weights of the linear estimator ``sum(w_plus*y) - sum(w_minus*y)``.

    Both vectors are aligned with the design; ``w_plus`` vanishes below the
    cutoff and ``w_minus`` at or above it. Each sums to one.
    """

    w_plus: np.ndarray
    w_minus: np.ndarray
    h_plus: float
    h_minus: float
    family: str
    kernel: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "w_plus", _frozen(self.w_plus))
        object.__setattr__(self, "w_minus", _frozen(self.w_minus))

    @property
    def combined(self) -> np.ndarray:
        """``w_plus + w_minus`` (supports are disjoint)."""
        return self.w_plus + self.w_minus

    def estimate(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return float(self.w_plus @ y - self.w_minus @ y)


@dataclass
class EstimateReport:
    Lhat: float
    maxbias: float
    sd: float
    ci_lower: float
    ci_upper: float
    onesided_lower: float
    onesided_upper: float
    half_length: float
    h_plus: float
    h_minus: float
    criterion: str
    criterion_value: float
    alpha: float
    weights: WeightSet = field(repr=False)
    sd_design: float = float("nan")
    C: float = float("nan")

    def to_dict(self, config_echo=None) -> dict:
        return {
            "estimate": self.Lhat,
            "maxbias": self.maxbias,
            "sd": self.sd,
            "ci": {
                "lower": self.ci_lower,
                "upper": self.ci_upper,
                "onesided_lower": self.onesided_lower,
                "onesided_upper": self.onesided_upper,
            },
            "h_plus": self.h_plus,
            "h_minus": self.h_minus,
            "criterion": {"kind": self.criterion, "value": self.criterion_value},
            "config_echo": config_echo or {},
        }
