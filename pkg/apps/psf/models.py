import os
from dataclasses import dataclass, field

import numpy as np

from core.utils.exception_handler import InvalidConfigError, InvalidRasterError


@dataclass
class PsfWorkspace:
    """
    Kernel geometry and worker settings for the PSF layer.

    `offsets` is the set of (u, v) offsets of the m x m kernel in row-major
    order; that order fixes the summation order of every render. A workspace
    owns scratch accumulators and is meant for one caller at a time.
    """

    kernel_size: int = 7
    threads: int = 1
    offsets: np.ndarray = field(init=False, repr=False)
    _scratch: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if int(self.kernel_size) != self.kernel_size or self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise InvalidConfigError(f"kernel size must be an odd integer >= 3, got {self.kernel_size}")
        if self.threads is None or self.threads < 1:
            self.threads = os.cpu_count() or 1
        radius = self.kernel_size // 2
        span = np.arange(-radius, radius + 1)
        rows, cols = np.meshgrid(span, span, indexing="ij")
        self.offsets = np.stack([rows.ravel(), cols.ravel()], axis=1)
        self.offsets.setflags(write=False)

    @classmethod
    def for_camera(cls, cam, threads=1):
        return cls(kernel_size=cam.kernel_size, threads=threads)

    @property
    def radius(self):
        return self.kernel_size // 2

    @property
    def squared_radii(self):
        """Distinct u^2 + v^2 values over the offset set."""
        return sorted({int(u * u + v * v) for u, v in self.offsets})

    def row_bands(self, height):
        """Contiguous row ranges, one per worker."""
        count = max(1, min(self.threads, height))
        edges = np.linspace(0, height, count + 1).round().astype(int)
        return [(int(start), int(stop)) for start, stop in zip(edges[:-1], edges[1:]) if stop > start]

    def accumulators(self, height, width, channels):
        """Zeroed numerator/denominator buffers, reused across calls of the same shape."""
        key = (height, width, channels)
        if key not in self._scratch:
            self._scratch = {
                key: (np.empty((height, width, channels)), np.empty((height, width))),
            }
        numerator, denominator = self._scratch[key]
        numerator.fill(0.0)
        denominator.fill(0.0)
        return numerator, denominator


@dataclass(frozen=True, eq=False)
class GradientPair:
    """Gradients of a scalar loss w.r.t. the input image and the CoC map."""

    d_image: np.ndarray
    d_coc: np.ndarray

    def __post_init__(self):
        if self.d_image.shape[:2] != self.d_coc.shape:
            raise InvalidRasterError("d_image and d_coc must share height and width")
        if not (np.isfinite(self.d_image).all() and np.isfinite(self.d_coc).all()):
            raise InvalidRasterError("gradients contain non-finite values")
