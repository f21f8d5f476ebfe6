import pytest

from apps.imaging.tests.factories import CameraIntrinsicsFactory


@pytest.fixture
def camera():
    """Return the camera of the worked example: F=35 mm, N=2.8, D_f=2 m, s=2"""
    return CameraIntrinsicsFactory()


@pytest.fixture
def wide_kernel_camera():
    """Return the same camera with an 11x11 kernel so 9.9 px stays unclamped"""
    return CameraIntrinsicsFactory(kernel_size=11)
