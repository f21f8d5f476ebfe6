import math
from dataclasses import dataclass, replace

from core.utils.exception_handler import InvalidCameraError

DEFAULT_PIXEL_SIZE_MM = 0.0056
DEFAULT_KERNEL_SIZE = 7


@dataclass(frozen=True)
class CameraIntrinsics:
    """Thin-lens camera: focal length F, f-number N, focus distance D_f,
    pixel pitch p, output scale s and PSF kernel size m."""

    focal_length_mm: float
    f_number: float
    focus_distance_m: float
    output_scale: float
    pixel_size_mm: float = DEFAULT_PIXEL_SIZE_MM
    kernel_size: int = DEFAULT_KERNEL_SIZE

    def __post_init__(self):
        for name in ("focal_length_mm", "f_number", "focus_distance_m", "output_scale", "pixel_size_mm"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidCameraError(f"{name} must be a positive finite number, got {value}")
        if self.focus_distance_m <= self.focal_length_m:
            raise InvalidCameraError(
                f"focus distance {self.focus_distance_m} m must exceed the focal length "
                f"{self.focal_length_m} m"
            )
        if int(self.kernel_size) != self.kernel_size or self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise InvalidCameraError(f"kernel size must be an odd integer >= 3, got {self.kernel_size}")

    @property
    def focal_length_m(self):
        return self.focal_length_mm / 1000.0

    @property
    def max_coc_pixels(self):
        """Largest CoC whose Gaussian support fits the m x m window."""
        return float(self.kernel_size - 1)

    def with_focus(self, focus_distance_m):
        """Same camera refocused at another distance."""
        return replace(self, focus_distance_m=float(focus_distance_m))

    def as_dict(self):
        return {
            "focal_mm": float(self.focal_length_mm),
            "f_number": float(self.f_number),
            "focus_m": float(self.focus_distance_m),
            "pixel_mm": float(self.pixel_size_mm),
            "scale": float(self.output_scale),
            "kernel": int(self.kernel_size),
        }
