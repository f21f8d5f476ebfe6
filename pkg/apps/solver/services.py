import csv
import logging
from pathlib import Path

import numpy as np
from django.conf import settings
from scipy import ndimage
from scipy.special import expit, logit

from apps.imaging.models import DepthMap, FocalSlice, FocalStack, Image
from apps.losses import filters
from apps.losses.models import LossReport
from apps.losses.services import total_loss
from apps.metrics.services import depth_metrics
from apps.optics.models import CameraIntrinsics
from apps.optics.services import coc_map
from apps.psf.models import PsfWorkspace
from apps.psf.services import backward, backward_to_depth, render_focused
from core.utils.exception_handler import DivergenceError, InvalidConfigError, OutputError

from .models import InitChoices, SolveResult, SolverConfig
from .optimizers import build_optimizer

logger = logging.getLogger(__name__)

# Fractions of the maximum scene depth, in the order slices are added
FOCAL_SEQUENCE = (0.2, 0.8, 0.1, 0.9, 0.3, 0.7, 0.4, 0.6, 0.5, 0.35)

CONVERGENCE_WINDOW = 20
CONVERGENCE_TOLERANCE = 1e-6
TEXTURE_THRESHOLD = 1e-4
LOG_EVERY = 50
MAX_BACKTRACKS = 30
# Relative distance within which a solved depth snaps onto a grid candidate
SNAP_TOLERANCE = 0.05
REFINE_SWEEPS = 8
# A reprobe sweep gaining less than this fraction of the summed error ends the search
REPROBE_TOLERANCE = 1e-3

LOSS_HISTORY_HEADER = ("iter", "total", "rec", "smooth", "sharp")

# Camera of the synthetic two-plane scene (35 mm, f/2.8, 5x downscale)
SYNTHETIC_CAMERA = {
    "focal_length_mm": 35.0,
    "f_number": 2.8,
    "output_scale": 5.0,
    "pixel_size_mm": 0.0056,
    "kernel_size": 7,
}
SYNTHETIC_PLANES = (0.25, 0.75)


def focal_sequence(n, max_depth_m):
    """First n focus distances of the focal sequence for a scene depth range."""
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= len(FOCAL_SEQUENCE):
        raise InvalidConfigError(f"number of slices must be in 1..{len(FOCAL_SEQUENCE)}, got {n}")
    if not max_depth_m > 0:
        raise InvalidConfigError(f"max depth must be positive, got {max_depth_m}")
    return [round(fraction * max_depth_m, 9) for fraction in FOCAL_SEQUENCE[: int(n)]]


def render_stack(img: Image, depth: DepthMap, cam: CameraIntrinsics, focus_distances, ws=None, max_depth_m=None):
    """Render one focused slice per focus distance from a shared image and depth map."""
    ws = ws or PsfWorkspace.for_camera(cam)
    slices = []
    for distance in focus_distances:
        coc = coc_map(cam.with_focus(distance), depth)
        slices.append(FocalSlice(image=render_focused(img, coc, ws), focus_distance_m=float(distance)))
        logger.debug("rendered slice at %.4g m", distance)
    return FocalStack(
        all_in_focus=img,
        slices=slices,
        camera=cam,
        ground_truth_depth=depth,
        max_depth_m=max_depth_m if max_depth_m is not None else depth.max_depth_m,
    )


def texture_confidence(img):
    """Local 7x7 luminance variance; near-zero values mark unidentifiable pixels."""
    luminance = img.luminance() if isinstance(img, Image) else np.asarray(img, dtype=np.float64)
    mean = filters.box_mean(luminance)
    return np.maximum(filters.box_mean(luminance * luminance) - mean * mean, 0.0)


def _default_grid_bounds(stack):
    distances = stack.focus_distances
    low, high = min(distances), max(distances)
    if high > low:
        return low, high
    if stack.max_depth_m is None:
        raise InvalidConfigError("grid search over a single slice needs explicit bounds or max_depth_m")
    return settings.DEFOCUS["SOLVER"]["MIN_DEPTH_FRACTION"] * stack.max_depth_m, stack.max_depth_m


def reconstruction_error(stack: FocalStack, depth, ws=None, cam=None):
    """Per-pixel absolute render error, channel-averaged and summed over slices."""
    cam = cam or stack.camera
    ws = ws or PsfWorkspace.for_camera(cam)
    depth = depth if isinstance(depth, DepthMap) else DepthMap(depth)
    img = stack.all_in_focus
    error = np.zeros(img.shape)
    for focal_slice in stack.slices:
        coc = coc_map(cam.with_focus(focal_slice.focus_distance_m), depth)
        rendered = render_focused(img, coc, ws)
        error += np.abs(rendered.data - focal_slice.image.data).mean(axis=2)
    return error


def grid_candidates(low, high, levels):
    if levels < 2:
        raise InvalidConfigError("grid search needs at least two levels")
    return np.linspace(low, high, levels)


def grid_init(stack: FocalStack, cam=None, levels=20, bounds=None, ws=None) -> DepthMap:
    """
    Per-pixel argmin of the reconstruction error over `levels` constant-depth
    candidates, using forward renders only.

    The error is the per-pixel absolute difference summed over slices and
    averaged over a 7x7 window. Textureless pixels get the mid-range depth.
    Away from depth edges, depths that lie on the candidate grid are
    recovered exactly.
    """
    low, high = bounds or _default_grid_bounds(stack)
    candidates = grid_candidates(low, high, levels)
    img = stack.all_in_focus

    errors = np.empty((levels,) + img.shape)
    for index, candidate in enumerate(candidates):
        constant = np.full(img.shape, candidate)
        errors[index] = filters.box_mean(reconstruction_error(stack, constant, ws, cam))

    depth = candidates[np.argmin(errors, axis=0)]
    textureless = texture_confidence(img) <= TEXTURE_THRESHOLD
    depth[textureless] = 0.5 * (low + high)
    logger.info(
        "grid init over %d levels in [%.4g, %.4g] m; %d textureless pixels",
        levels, low, high, int(textureless.sum()),
    )
    return DepthMap(depth)


def _window_sum(error, size):
    # direct sums keep all-zero windows exactly zero
    taps = np.ones(size)
    summed = ndimage.correlate1d(error, taps, axis=0, mode="constant")
    return ndimage.correlate1d(summed, taps, axis=1, mode="constant")


def snap_to_grid(depth, candidates, tolerance=SNAP_TOLERANCE):
    """Move depths within `tolerance` (relative) of a candidate onto it."""
    depth = np.asarray(depth, dtype=np.float64)
    nearest = candidates[np.argmin(np.abs(depth[..., None] - candidates), axis=-1)]
    return np.where(np.abs(depth - nearest) <= tolerance * nearest, nearest, depth)


def reprobe(stack: FocalStack, depth, candidates, ws=None, sweeps=REFINE_SWEEPS):
    """
    Re-test every pixel with a nonzero local reconstruction error against all
    candidates, holding its neighbours at their current depths.

    A pixel's depth only reaches outputs within the kernel radius, so pixels
    one kernel width apart are probed together in a single render per
    candidate, and the error summed over that window is exactly the pixel's
    share of the total. Each sweep moves only the pixels whose improvement is
    the largest among all pixels they interact with, so the summed error
    strictly falls. Pixels stuck where no slice responds to depth are
    recovered this way.
    """
    ws = ws or PsfWorkspace.for_camera(stack.camera)
    stride = ws.kernel_size
    current = np.array(depth, dtype=np.float64)
    for sweep in range(sweeps):
        local = _window_sum(reconstruction_error(stack, current, ws), stride)
        best, best_error = current.copy(), local.copy()
        for row in range(stride):
            for col in range(stride):
                probed = np.zeros(current.shape, dtype=bool)
                probed[row::stride, col::stride] = True
                probed &= local > 0.0
                if not probed.any():
                    continue
                for candidate in candidates:
                    trial = np.where(probed, candidate, current)
                    error = _window_sum(reconstruction_error(stack, trial, ws), stride)
                    better = probed & (error < best_error)
                    best[better] = candidate
                    best_error[better] = error[better]

        gain = local - best_error
        # pixels closer than two kernel widths share outputs
        moved = (gain > 0.0) & (gain == ndimage.maximum_filter(gain, size=2 * stride - 1, mode="constant"))
        current[moved] = best[moved]
        logger.debug("reprobe sweep %d moved %d pixels", sweep, int(moved.sum()))
        if not moved.any() or gain[moved].sum() <= REPROBE_TOLERANCE * local.sum() / stride**2:
            break
    return current


def refine_on_grid(stack, depth, report, objective, candidates, ws=None):
    """
    Polish a solved depth map against the candidate grid: snap near-candidate
    depths, then re-probe. The polished map replaces the input only when it
    lowers the total loss. Returns (depth, report).
    """
    polished = reprobe(stack, snap_to_grid(depth, candidates), candidates, ws)
    if np.array_equal(polished, depth):
        return depth, report
    polished_report, _ = objective.evaluate(polished)
    if polished_report.is_finite() and polished_report.total < report.total:
        logger.info("grid refinement lowered the loss from %.6g to %.6g", report.total, polished_report.total)
        return polished, polished_report
    logger.info("grid refinement kept the solved depth (loss %.6g)", report.total)
    return depth, report


class DepthObjective:
    """Slice-averaged loss of a depth map against a focal stack, with its depth gradient."""

    def __init__(self, stack: FocalStack, weights, ws=None):
        if len(stack) == 0:
            raise InvalidConfigError("focal stack has no slices")
        self.stack = stack
        self.weights = weights
        self.ws = ws or PsfWorkspace.for_camera(stack.camera)
        self.cameras = [stack.camera.with_focus(s.focus_distance_m) for s in stack.slices]

    def evaluate(self, depth):
        """Return (LossReport, dL/dDepth) averaged over slices."""
        depth = depth if isinstance(depth, DepthMap) else DepthMap(depth)
        img = self.stack.all_in_focus
        reports = []
        gradient = np.zeros(depth.shape)
        for cam, focal_slice in zip(self.cameras, self.stack.slices):
            coc = coc_map(cam, depth)
            rendered = render_focused(img, coc, self.ws)
            report, d_rendered, d_smooth = total_loss(rendered, focal_slice.image, depth, img, self.weights)
            reports.append(report)
            if not report.is_finite():
                break
            pair = backward(d_rendered, img, coc, rendered, self.ws)
            gradient += backward_to_depth(pair, cam, depth) + d_smooth
        return LossReport.mean(reports), gradient / len(self.stack)


def _to_latent(depth, d_min, span):
    fraction = np.clip((depth - d_min) / span, 1e-6, 1.0 - 1e-6)
    return logit(fraction)


def _to_depth(latent, d_min, span):
    return np.clip(d_min + span * expit(latent), d_min, d_min + span)


def _initial_latent(stack, config, ws, initial_depth=None):
    d_min, d_max = config.depth_bounds
    span = d_max - d_min
    if initial_depth is not None:
        return _to_latent(initial_depth.data, d_min, span)
    if config.init == InitChoices.GRID:
        start = grid_init(stack, levels=config.grid_levels, bounds=config.depth_bounds, ws=ws)
        return _to_latent(start.data, d_min, span)
    rng = np.random.default_rng(config.seed)
    logger.info("constant init at %.4g m", d_min + 0.5 * span)
    return 1e-3 * rng.standard_normal(stack.all_in_focus.shape)


def _converged(history):
    if history[-1].total < 1e-14:
        return True
    if len(history) <= CONVERGENCE_WINDOW:
        return False
    before = history[-1 - CONVERGENCE_WINDOW].total
    decrease = (before - history[-1].total) / max(abs(before), 1e-300)
    return 0.0 <= decrease < CONVERGENCE_TOLERANCE


class _SolveState:
    def __init__(self, objective, latent, d_min, span, last=None):
        self.latent = latent
        self.depth = _to_depth(latent, d_min, span)
        self.report, d_depth = objective.evaluate(self.depth)
        if not self.report.is_finite():
            raise DivergenceError(
                "loss became non-finite"
                + (f"; last finite loss {last.report.total:.10g}" if last else ""),
                last_depth=last.depth if last else None,
                last_loss=last.report.total if last else None,
            )
        sigma = expit(latent)
        self.gradient = d_depth * span * sigma * (1.0 - sigma)


def _descend(objective, optimizer, state, d_min, span):
    """Take one optimizer step that does not raise the loss, halving the step size until it fits."""
    for _ in range(MAX_BACKTRACKS):
        candidate = _SolveState(objective, optimizer.step(state.latent, state.gradient), d_min, span, last=state)
        if candidate.report.total <= state.report.total:
            optimizer.accept()
            return candidate
        optimizer.shrink()
    return None


def solve_depth(stack: FocalStack, config: SolverConfig, ws=None, initial_depth=None) -> SolveResult:
    """
    Recover depth by first-order optimization of a latent field z, with
    depth = d_min + (d_max - d_min) sigmoid(z) so every iterate stays in bounds.

    Each iteration records the loss of the current depth, stops once the total
    loss has dropped by less than 1e-6 (relative) over the last 20 iterations,
    then takes one optimizer step. A step that would raise the loss is retried
    at half the step size, and the halving persists, so the loss history never
    increases. When no step fits after 30 halvings the solve stops.

    With `config.refine` the final depth is polished against the grid
    candidates (see `refine_on_grid`) and the last history entry reports the
    returned depth. `initial_depth` overrides the configured initialization.
    """
    if len(stack) == 0:
        raise InvalidConfigError("focal stack has no slices")
    ws = ws or PsfWorkspace.for_camera(stack.camera)
    d_min, d_max = config.depth_bounds
    span = d_max - d_min
    objective = DepthObjective(stack, config.weights, ws)
    optimizer = build_optimizer(config.optimizer, config.step_size)

    state = _SolveState(objective, _initial_latent(stack, config, ws, initial_depth), d_min, span)
    history = []
    converged = False
    for iteration in range(config.iterations):
        history.append(state.report)
        if iteration % LOG_EVERY == 0:
            logger.info("iteration %d: loss %.6g", iteration, state.report.total)
        if _converged(history):
            converged = True
            logger.info("converged after %d iterations at loss %.6g", len(history), state.report.total)
            break
        if iteration == config.iterations - 1:
            break
        candidate = _descend(objective, optimizer, state, d_min, span)
        if candidate is None:
            converged = True
            logger.info("no descending step after %d iterations at loss %.6g", len(history), state.report.total)
            break
        state = candidate

    depth = state.depth
    if config.refine:
        candidates = grid_candidates(d_min, d_max, config.grid_levels)
        depth, history[-1] = refine_on_grid(stack, depth, state.report, objective, candidates, ws)

    return SolveResult(
        depth=DepthMap(depth),
        loss_history=tuple(history),
        converged=converged,
        confidence=texture_confidence(stack.all_in_focus),
    )


def write_loss_history(path, history):
    """Write per-iteration loss reports as CSV with an `iter,total,rec,smooth,sharp` header."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(LOSS_HISTORY_HEADER)
            for iteration, report in enumerate(history):
                writer.writerow(
                    [iteration] + [repr(float(getattr(report, name))) for name in LOSS_HISTORY_HEADER[1:]]
                )
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def synthetic_camera(focus_distance_m):
    return CameraIntrinsics(focus_distance_m=focus_distance_m, **SYNTHETIC_CAMERA)


def synthetic_two_plane_scene(size=64, max_depth_m=10.0, channels=1, seed=0):
    """
    Deterministic textured scene split into two fronto-parallel planes: the
    left half at 0.25 and the right half at 0.75 of the maximum depth.
    """
    rng = np.random.default_rng(seed)
    texture = ndimage.gaussian_filter(rng.random((size, size, channels)), sigma=(0.7, 0.7, 0))
    low, high = texture.min(), texture.max()
    texture = 0.1 + 0.8 * (texture - low) / (high - low)

    depth = np.full((size, size), SYNTHETIC_PLANES[0] * max_depth_m)
    depth[:, size // 2 :] = SYNTHETIC_PLANES[1] * max_depth_m
    return Image(texture), DepthMap(depth, max_depth_m=max_depth_m)


def sweep_focus(img: Image, depth: DepthMap, cam: CameraIntrinsics, fractions, config: SolverConfig, max_depth_m, ws=None):
    """
    Single-slice solves with the focus placed at each fraction of the maximum
    depth. Returns (fraction, focus_m, abs_rel) rows scored on textured pixels.
    """
    ws = ws or PsfWorkspace.for_camera(cam)
    confidence = texture_confidence(img)
    rows = []
    for fraction in fractions:
        focus = round(fraction * max_depth_m, 9)
        stack = render_stack(img, depth, cam.with_focus(focus), [focus], ws=ws, max_depth_m=max_depth_m)
        result = solve_depth(stack, config, ws=ws)
        score = depth_metrics(result.depth, depth, mask=confidence > TEXTURE_THRESHOLD).abs_rel
        logger.info("focus %.4g m: abs_rel %.4g", focus, score)
        rows.append((float(fraction), focus, score))
    return rows

