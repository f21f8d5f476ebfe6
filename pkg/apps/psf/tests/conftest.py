import numpy as np
import pytest

from apps.imaging.models import CocMap, Image
from apps.psf.models import PsfWorkspace


@pytest.fixture
def workspace():
    """Return a single-threaded 7x7 workspace"""
    return PsfWorkspace(kernel_size=7, threads=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_instance(rng, height, width, channels, low=0.0, high=6.0):
    """Random image and CoC map; CoC below 1 is flagged in-focus."""
    img = Image(rng.random((height, width, channels)))
    coc = CocMap(rng.uniform(low, high, (height, width)))
    return img, coc


@pytest.fixture
def instance(rng):
    """Return a 9x11 RGB image with a mixed in-focus/blurred CoC map"""
    return random_instance(rng, 9, 11, 3)
