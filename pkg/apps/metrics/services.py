import math

import numpy as np

from apps.imaging.models import DepthMap, Image
from apps.losses.services import ssim_map
from core.utils.exception_handler import InvalidDepthError, ShapeMismatchError, ValidationFailure

from .models import DepthMetrics, ImageMetrics

DELTA_BASE = 1.25
DEFAULT_MIN_DEPTH_M = 1e-3


def _values(value):
    return value.data if isinstance(value, (Image, DepthMap)) else np.asarray(value, dtype=np.float64)


def _valid_pixels(pred, gt, mask):
    pred, gt = _values(pred), _values(gt)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"prediction {pred.shape} and ground truth {gt.shape} differ in size")
    valid = np.ones(gt.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if valid.shape != gt.shape:
        raise ShapeMismatchError(f"mask {valid.shape} does not match depth {gt.shape}")
    return pred, gt, valid


def depth_metrics(pred, gt, mask=None, cap=None, min_depth=DEFAULT_MIN_DEPTH_M) -> DepthMetrics:
    """
    Abs Rel, Sq Rel, RMSE, RMSE log, log10 and delta accuracies over masked
    pixels. With a cap, ground truth beyond the cap is excluded and predictions
    are clamped to [min_depth, cap]. Delta thresholds use a strict inequality.
    """
    pred, gt, valid = _valid_pixels(pred, gt, mask)
    if cap is not None:
        valid = valid & (gt <= cap)
    if not valid.any():
        raise ValidationFailure("empty evaluation mask")

    p, g = pred[valid], gt[valid]
    if (g <= 0).any() or (p <= 0).any():
        raise InvalidDepthError("non-positive depth inside the evaluation mask")
    if cap is not None:
        p = np.clip(p, min_depth, cap)

    diff = p - g
    ratio = np.maximum(p / g, g / p)
    return DepthMetrics(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        sq_rel=float(np.mean(diff**2 / g)),
        rmse=float(np.sqrt(np.mean(diff**2))),
        rmse_log=float(np.sqrt(np.mean((np.log(p) - np.log(g)) ** 2))),
        log10=float(np.mean(np.abs(np.log10(p) - np.log10(g)))),
        delta1=float(np.mean(ratio < DELTA_BASE)),
        delta2=float(np.mean(ratio < DELTA_BASE**2)),
        delta3=float(np.mean(ratio < DELTA_BASE**3)),
    )


def psnr(a, b):
    """PSNR on the [0, 1] range; math.inf when the images are identical."""
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"images {a.shape} and {b.shape} differ in size")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def pearson(pred, gt, mask=None):
    """Sample Pearson correlation between masked prediction and ground truth."""
    pred, gt, valid = _valid_pixels(pred, gt, mask)
    p, g = pred[valid], gt[valid]
    if p.size < 2:
        raise ValidationFailure("pearson needs at least two valid pixels")
    p, g = p - p.mean(), g - g.mean()
    spread = math.sqrt(float(np.sum(p * p)) * float(np.sum(g * g)))
    if spread == 0.0:
        raise ValidationFailure("zero variance")
    return float(np.clip(np.sum(p * g) / spread, -1.0, 1.0))


def image_metrics(a, b) -> ImageMetrics:
    return ImageMetrics(psnr=psnr(a, b), ssim=float(np.mean(ssim_map(a, b))))
