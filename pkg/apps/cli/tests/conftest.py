import numpy as np
import pytest
import yaml

from apps.cli.services import run_command
from apps.imaging.models import DepthMap, Image
from apps.imaging.services import save_depth, save_image


@pytest.fixture
def camera_config(tmp_path):
    """Write the KITTI-style camera config: F=35 mm, N=2.8, s=2"""
    path = tmp_path / "camera.yaml"
    path.write_text(yaml.safe_dump({"focal_mm": 35.0, "f_number": 2.8, "focus_m": 2.0, "scale": 2.0}))
    return path


@pytest.fixture
def image_file(tmp_path):
    """Write a random 16x16 grayscale PNG"""
    path = tmp_path / "image.png"
    levels = np.random.default_rng(5).integers(0, 256, (16, 16))
    save_image(Image(levels / 255.0), path)
    return path


@pytest.fixture
def two_plane_depth_file(tmp_path):
    """Write a depth map with the left half at 2 m and the right half at 4 m"""
    path = tmp_path / "depth.dpt"
    depth = np.full((16, 16), 2.0)
    depth[:, 8:] = 4.0
    save_depth(DepthMap(depth), path)
    return path


@pytest.fixture
def far_depth_file(tmp_path):
    """Write a depth ramp from 10 m to 70 m"""
    path = tmp_path / "far.dpt"
    save_depth(DepthMap(np.linspace(10.0, 70.0, 256).reshape(16, 16)), path)
    return path


@pytest.fixture
def fixture_manifest(tmp_path):
    """Write the 32x32 two-plane fixture with an F2 stack and return its manifest"""
    outcome = run_command("make_fixture", "--out-dir", str(tmp_path / "fixture"), "--size", "32")
    assert outcome.ok, outcome.report
    return tmp_path / "fixture" / "stack.yaml"
