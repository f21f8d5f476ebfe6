import numpy as np
import pytest


@pytest.fixture
def gt_depth():
    """Return a 10x10 ground-truth ramp from 1 m to 80 m"""
    return np.linspace(1.0, 80.0, 100).reshape(10, 10)
