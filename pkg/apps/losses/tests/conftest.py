import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def pair(rng):
    """Return two unrelated 14x13x3 images"""
    return rng.random((14, 13, 3)), rng.random((14, 13, 3))


@pytest.fixture
def point_source():
    """Return a 15x15 luminance field with a single bright center pixel"""
    field = np.zeros((15, 15, 1))
    field[7, 7, 0] = 1.0
    return field


def central_difference(function, values, index, step=1e-6):
    plus, minus = values.copy(), values.copy()
    plus[index] += step
    minus[index] -= step
    return (function(plus) - function(minus)) / (2.0 * step)
