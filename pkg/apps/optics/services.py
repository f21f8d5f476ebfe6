import math

import numpy as np

from apps.imaging.models import CocMap, DepthMap
from core.utils.exception_handler import InvalidDepthError

DEFAULT_COC_LIMIT_MM = 0.061


def _scalar_or_array(values, scalar):
    return float(values) if scalar else values


def _positive_depth(d_o):
    scalar = np.ndim(d_o) == 0
    depth = np.asarray(d_o, dtype=np.float64)
    if not np.isfinite(depth).all() or (depth <= 0).any():
        raise InvalidDepthError("object distance must be positive and finite")
    return depth, scalar


def aperture_mm(cam):
    """Aperture diameter A = F / N in millimeters."""
    return cam.focal_length_mm / cam.f_number


def _coc_scale_mm(cam):
    # A * F / (D_f - F) with F and D_f in meters, so the result stays in mm
    return aperture_mm(cam) * cam.focal_length_m / (cam.focus_distance_m - cam.focal_length_m)


def _pixel_scale(cam):
    return _coc_scale_mm(cam) / (cam.pixel_size_mm * cam.output_scale)


def coc_mm(cam, d_o):
    """Thin-lens circle-of-confusion diameter in mm for objects at d_o meters."""
    depth, scalar = _positive_depth(d_o)
    focus = cam.focus_distance_m
    diameter = _coc_scale_mm(cam) * np.abs(depth - focus) / depth
    return _scalar_or_array(diameter, scalar)


def coc_pixels(cam, d_o):
    """CoC diameter converted to output pixels: C_mm / (p * s). Not clamped."""
    depth, scalar = _positive_depth(d_o)
    diameter = coc_mm(cam, depth) / (cam.pixel_size_mm * cam.output_scale)
    return _scalar_or_array(diameter, scalar)


def coc_map(cam, depth: DepthMap) -> CocMap:
    """
    Per-pixel CoC for a depth map. Entries below one pixel are flagged in-focus
    (delta kernel); entries above kernel_size - 1 are clamped and flagged.
    """
    raw = coc_pixels(cam, depth.data)
    limit = cam.max_coc_pixels
    return CocMap(
        data=np.minimum(raw, limit),
        in_focus=raw < 1.0,
        clamped=raw > limit,
    )


def d_coc_d_depth(cam, d_o):
    """
    Derivative of the pixel CoC with respect to object distance.

    Zero inside the in-focus dead zone, at the upper clamp and exactly at the
    focus distance (chosen subgradient).
    """
    depth, scalar = _positive_depth(d_o)
    focus = cam.focus_distance_m
    raw = coc_pixels(cam, depth)
    slope = np.sign(depth - focus) * _pixel_scale(cam) * focus / depth**2
    active = (raw >= 1.0) & (raw <= cam.max_coc_pixels)
    derivative = np.where(active, slope, 0.0)
    return _scalar_or_array(derivative, scalar)


def hyperfocal_distance_m(cam, coc_limit_mm=DEFAULT_COC_LIMIT_MM):
    """Focus distance beyond which everything to infinity stays under the CoC-limit."""
    focal_mm = cam.focal_length_mm
    return (focal_mm**2 / (cam.f_number * coc_limit_mm) + focal_mm) / 1000.0


def depth_of_field(cam, coc_limit_mm=DEFAULT_COC_LIMIT_MM):
    """
    Near and far distances (meters) between which the CoC stays within the
    CoC-limit. The far limit is infinite when the limit exceeds the CoC at
    infinity.
    """
    scale = _coc_scale_mm(cam)
    focus = cam.focus_distance_m
    near = focus / (1.0 + coc_limit_mm / scale)
    if coc_limit_mm >= scale:
        return near, math.inf
    return near, focus / (1.0 - coc_limit_mm / scale)


def kernel_size_for_coc_limit(coc_limit_mm, pixel_size_mm, output_scale):
    """Smallest odd kernel size whose support holds a CoC-limit blur."""
    support = math.ceil(coc_limit_mm / (pixel_size_mm * output_scale) - 1e-12)
    size = support + 1
    return size if size % 2 == 1 else size + 1
