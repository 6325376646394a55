"""Data-driven lower bound on the smoothness constant ``C``.

On one side of the cutoff, take three adjacent intervals of ``|x|``. A
combination of the three interval means of ``y`` that annihilates linear
functions estimates a curvature ``mu`` with ``|mu| <= C`` for any function
in the Taylor class of order 2. Inverting the folded-normal critical value
gives a lower confidence bound for ``|mu|``, hence for ``C``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .critical import cv_inverse
from .design import Design
from .exceptions import DegenerateDenominator, DomainError, EmptyInterval, TooFewObservations


@dataclass(frozen=True)
class IntervalScheme:
    """Intervals ``I_k = [a[k-1], a[k])`` in ``|x|`` on one side of the cutoff."""

    a: tuple
    side: str = "+"

    def __post_init__(self):
        if self.side not in ("+", "-"):
            raise DomainError(f"side must be '+' or '-', got {self.side!r}")
        a = tuple(float(v) for v in self.a)
        if len(a) != 4 or not (a[0] <= a[1] <= a[2] <= a[3]):
            raise DomainError(f"need four nondecreasing endpoints, got {self.a}")
        object.__setattr__(self, "a", a)

    def masks(self, d: Design):
        side = d.plus if self.side == "+" else d.minus
        ax = np.abs(d.x)
        return [side & (ax >= lo) & (ax < hi)
                for lo, hi in zip(self.a[:-1], self.a[1:])]


@dataclass(frozen=True)
class CurvatureStat:
    Z: float
    tau: float
    lam: float
    counts: tuple


def default_scheme(d: Design, side="+", obs_per_interval=100) -> IntervalScheme:
    """Three intervals of ``obs_per_interval`` points nearest the cutoff.

    If the side has fewer than ``4 * obs_per_interval`` points, the
    remainder is added to the outermost interval instead of being dropped.
    """
    mask = d.plus if side == "+" else d.minus
    ax = np.sort(np.abs(d.x[mask]))
    m, k = ax.size, int(obs_per_interval)
    if m < 3 * k:
        raise TooFewObservations(
            f"{m} observations on the {side} side; need at least {3 * k}")

    def cut(i):
        # first excluded |x|; everything before it falls inside
        return ax[i] if i < m else np.nextafter(ax[-1], np.inf)

    last = m if m - 3 * k < k else 3 * k
    return IntervalScheme((0.0, cut(k), cut(2 * k), cut(last)), side)


def curvature_stat(d: Design, scheme: IntervalScheme, sigma2=None) -> CurvatureStat:
    """Curvature statistic ``Z`` and its standard deviation ``tau``.

    ``sigma2`` overrides the design variances (e.g. nearest-neighbour
    estimates).
    """
    s2 = d.sigma2 if sigma2 is None else np.asarray(sigma2, dtype=float)
    masks = scheme.masks(d)
    counts = tuple(int(m.sum()) for m in masks)
    for k, c in enumerate(counts, start=1):
        if c < 1:
            raise EmptyInterval(f"interval I_{k} of the {scheme.side} side is empty")
    ax = np.abs(d.x)
    mean = lambda v, m: float(np.mean(v[m]))  # noqa: E731
    m1, m2, m3 = (mean(ax, m) for m in masks)
    if m3 == m1:
        raise DegenerateDenominator("outer and inner intervals have the same mean |x|")
    lam = (m3 - m2) / (m3 - m1)
    y = d.y
    x2 = d.x ** 2
    num = lam * mean(y, masks[0]) + (1 - lam) * mean(y, masks[2]) - mean(y, masks[1])
    den = lam * mean(x2, masks[0]) + (1 - lam) * mean(x2, masks[2]) + mean(x2, masks[1])
    if den == 0:
        raise DegenerateDenominator("all x^2 interval means are zero")
    var = (lam ** 2 * mean(s2, masks[0]) / counts[0]
           + (1 - lam) ** 2 * mean(s2, masks[2]) / counts[2]
           + mean(s2, masks[1]) / counts[1]) / den ** 2
    return CurvatureStat(num / den, float(np.sqrt(var)), lam, counts)


def lower_ci_C(stat: CurvatureStat, alpha=0.05) -> float:
    """Lower confidence bound for ``|mu|`` (hence ``C``) at level ``1 - alpha``.

    ``alpha = 0.5`` gives the half-median-unbiased estimate.
    """
    if not stat.tau > 0:
        raise DomainError("tau must be positive")
    return float(stat.tau * cv_inverse(abs(stat.Z) / stat.tau, alpha))
