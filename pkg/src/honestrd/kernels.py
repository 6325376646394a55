"""Kernels with support in [-1, 1].

Only the three built-in kernels have compiled fast paths; any other callable
works through the pure numpy route.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np


def _triangular(u):
    return np.maximum(0.0, 1.0 - np.abs(u))


def _uniform(u):
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


def _epanechnikov(u):
    return 0.75 * np.maximum(0.0, 1.0 - np.asarray(u) ** 2)


@dataclass(frozen=True)
class Kernel:
    name: str
    eval: Callable
    code: int = -1  # id understood by the compiled core, -1 if none

    def __call__(self, u):
        return self.eval(np.asarray(u, dtype=float))


TRIANGULAR = Kernel("triangular", _triangular, 0)
UNIFORM = Kernel("uniform", _uniform, 1)
EPANECHNIKOV = Kernel("epanechnikov", _epanechnikov, 2)

KERNELS = {k.name: k for k in (TRIANGULAR, UNIFORM, EPANECHNIKOV)}


def get_kernel(kernel) -> Kernel:
    if isinstance(kernel, Kernel):
        return kernel
    if callable(kernel):
        return Kernel(getattr(kernel, "__name__", "custom"), kernel)
    try:
        return KERNELS[str(kernel).lower()]
    except KeyError:
        raise ValueError(f"unknown kernel {kernel!r}; "
                         f"choose from {sorted(KERNELS)}") from None
