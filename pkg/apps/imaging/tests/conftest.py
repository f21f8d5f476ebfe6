import numpy as np
import pytest

from apps.imaging.models import FocalSlice, FocalStack

from .factories import CameraIntrinsicsFactory, DepthMapFactory, ImageFactory


@pytest.fixture
def camera():
    """Return the 35 mm f/2.8 camera focused at 2 m"""
    return CameraIntrinsicsFactory()


@pytest.fixture
def image():
    """Return a random 12x12 RGB image"""
    return ImageFactory(seed=1)


@pytest.fixture
def gray_image():
    """Return a random 12x12 single-channel image"""
    return ImageFactory(seed=2, channels=1)


@pytest.fixture
def depth():
    """Return a random 12x12 depth map"""
    return DepthMapFactory(seed=3)


@pytest.fixture
def stack(gray_image, depth, camera):
    """Return a two-slice stack built from shifted copies of the image"""
    slices = [
        FocalSlice(image=gray_image, focus_distance_m=2.0),
        FocalSlice(image=ImageFactory(seed=4, channels=1), focus_distance_m=8.0),
    ]
    return FocalStack(
        all_in_focus=gray_image,
        slices=slices,
        camera=camera,
        ground_truth_depth=depth,
        max_depth_m=10.0,
        loss_overrides={"lambda_sharp": 0.5},
    )


@pytest.fixture
def quantized_gray():
    """Return a 16-bit-exact single-channel image"""
    levels = np.arange(64, dtype=np.float64).reshape(8, 8) * 1000.0
    return ImageFactory.build(data=levels / 65535.0)
