from dataclasses import dataclass, field

import numpy as np

from apps.optics.models import CameraIntrinsics
from core.utils.exception_handler import (
    InvalidDepthError,
    InvalidRasterError,
    ManifestError,
    ShapeMismatchError,
)


def _frozen_array(values, dtype=np.float64):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Image:
    """H x W x C raster (C in {1, 3}) of intensities, nominally in [0, 1].

    Values are stored as-is: no gamma transform is applied on load or before
    blurring.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[..., np.newaxis]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise InvalidRasterError(f"image must be H x W x {{1,3}}, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidRasterError("image must have positive height and width")
        if not np.isfinite(data).all():
            raise InvalidRasterError("image contains non-finite values")
        object.__setattr__(self, "data", _frozen_array(data))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape[:2]

    def luminance(self):
        """Mean over channels, H x W."""
        return self.data.mean(axis=2)


@dataclass(frozen=True, eq=False)
class DepthMap:
    """H x W depth in meters; strictly positive, optionally bounded by max_depth_m."""

    data: np.ndarray
    max_depth_m: float | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidDepthError(f"depth map must be a non-empty H x W array, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise InvalidDepthError("non-finite depth")
        if (data <= 0).any():
            raise InvalidDepthError("non-positive depth")
        if self.max_depth_m is not None and (data > self.max_depth_m).any():
            raise InvalidDepthError(f"depth exceeds the scene maximum of {self.max_depth_m} m")
        object.__setattr__(self, "data", _frozen_array(data))

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class CocMap:
    """H x W circle-of-confusion diameters in pixels.

    `in_focus` marks pixels rendered with a delta kernel (C < 1) and `clamped`
    marks pixels whose CoC was cut at the kernel-support limit.
    """

    data: np.ndarray
    in_focus: np.ndarray | None = None
    clamped: np.ndarray | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise InvalidRasterError(f"CoC map must be H x W, got shape {data.shape}")
        if not np.isfinite(data).all() or (data < 0).any():
            raise InvalidRasterError("CoC map must be finite and non-negative")
        in_focus = data < 1.0 if self.in_focus is None else np.asarray(self.in_focus, dtype=bool)
        clamped = np.zeros(data.shape, dtype=bool) if self.clamped is None else np.asarray(self.clamped, dtype=bool)
        if in_focus.shape != data.shape or clamped.shape != data.shape:
            raise ShapeMismatchError("CoC flags must match the CoC map shape")
        object.__setattr__(self, "data", _frozen_array(data))
        object.__setattr__(self, "in_focus", _frozen_array(in_focus, dtype=bool))
        object.__setattr__(self, "clamped", _frozen_array(clamped, dtype=bool))

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class FocalSlice:
    image: Image
    focus_distance_m: float


@dataclass(frozen=True, eq=False)
class FocalStack:
    """All-in-focus image plus focused slices that share one camera."""

    all_in_focus: Image
    slices: tuple
    camera: CameraIntrinsics
    ground_truth_depth: DepthMap | None = None
    max_depth_m: float | None = None
    loss_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        slices = tuple(self.slices)
        object.__setattr__(self, "slices", slices)

        reference = self.all_in_focus.data.shape
        seen = set()
        for index, focal_slice in enumerate(slices):
            if focal_slice.image.data.shape != reference:
                raise ShapeMismatchError(
                    f"slice {index} has shape {focal_slice.image.data.shape}, "
                    f"expected {reference} to match the all-in-focus image"
                )
            distance = float(focal_slice.focus_distance_m)
            if distance <= self.camera.focal_length_m:
                raise ManifestError(
                    f"slice {index} focus distance {distance} m does not exceed the focal length"
                )
            if distance in seen:
                raise ManifestError(f"duplicate focus distance {distance} m")
            seen.add(distance)

        if self.ground_truth_depth is not None and self.ground_truth_depth.shape != reference[:2]:
            raise ShapeMismatchError("ground-truth depth does not match the image dimensions")

    @property
    def focus_distances(self):
        return [focal_slice.focus_distance_m for focal_slice in self.slices]

    def __len__(self):
        return len(self.slices)
