import pytest

from apps.losses.models import LossWeights
from apps.psf.models import PsfWorkspace
from apps.solver.models import SolverConfig
from apps.solver.services import focal_sequence, render_stack, synthetic_camera, synthetic_two_plane_scene

MAX_DEPTH_M = 10.0


@pytest.fixture
def workspace():
    return PsfWorkspace(kernel_size=7, threads=1)


@pytest.fixture
def small_scene():
    """Return the 32x32 two-plane scene (planes at 2.5 m and 7.5 m)"""
    return synthetic_two_plane_scene(size=32, max_depth_m=MAX_DEPTH_M, seed=0)


@pytest.fixture
def scene():
    """Return the 64x64 two-plane scene used by the end-to-end solves"""
    return synthetic_two_plane_scene(size=64, max_depth_m=MAX_DEPTH_M, seed=0)


def make_stack(scene, n_slices, ws=None):
    img, depth = scene
    distances = focal_sequence(n_slices, MAX_DEPTH_M)
    return render_stack(img, depth, synthetic_camera(distances[0]), distances, ws=ws, max_depth_m=MAX_DEPTH_M)


@pytest.fixture
def small_stack(small_scene, workspace):
    """Return an F2 stack (slices at 2 m and 8 m) of the small scene"""
    return make_stack(small_scene, 2, workspace)


@pytest.fixture
def quick_config():
    """Return a short constant-init solve configuration"""
    return SolverConfig(depth_bounds=(0.5, MAX_DEPTH_M), iterations=8, init="constant", seed=3, refine=False)


@pytest.fixture
def no_smoothing():
    return LossWeights(lambda_smooth=0.0)
