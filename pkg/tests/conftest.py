import numpy as np
import pytest

from honestrd import Design


def random_design(rng, n, hetero=True, y=None):
    """Design with points on both sides of the cutoff."""
    while True:
        x = rng.uniform(-1, 1, n)
        if np.sum(x >= 0) >= 4 and np.sum(x < 0) >= 4:
            break
    s2 = rng.uniform(0.5, 2.0, n) if hetero else np.ones(n)
    if y is None:
        y = rng.normal(size=n)
    return Design.from_arrays(x, y, s2)


def grid_design(n=200, sigma2=1.0, seed=0):
    x = np.linspace(-1, 1, n)
    y = np.random.default_rng(seed).normal(size=n) * np.sqrt(sigma2)
    return Design.from_arrays(x, y, np.full(n, sigma2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def uniform200():
    return grid_design(200)
