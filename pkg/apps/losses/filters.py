"""Windowed image operators used by the losses, each paired with its adjoint.

Operators act on the first two axes of H x W or H x W x C arrays. Adjoints are
exact transposes, so analytic gradients can be pulled back through them.
"""

import numpy as np
from scipy import ndimage

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
STATS_WINDOW = 7

_LAPLACE_KERNEL = np.array([1.0, -2.0, 1.0])


def gaussian_kernel(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    offsets = np.arange(size, dtype=np.float64) - size // 2
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def _separable(values, kernel):
    result = ndimage.correlate1d(values, kernel, axis=0, mode="constant", cval=0.0)
    return ndimage.correlate1d(result, kernel, axis=1, mode="constant", cval=0.0)


def _coverage(shape, kernel):
    return _separable(np.ones(shape[:2], dtype=np.float64), kernel)


def _expand(weights, like):
    return weights if like.ndim == weights.ndim else weights[..., np.newaxis]


def windowed_mean(values, kernel=None):
    """Gaussian-weighted local mean; weights renormalized where the window leaves the image."""
    kernel = gaussian_kernel() if kernel is None else kernel
    return _separable(values, kernel) / _expand(_coverage(values.shape, kernel), values)


def windowed_mean_adjoint(grad, kernel=None):
    kernel = gaussian_kernel() if kernel is None else kernel
    return _separable(grad / _expand(_coverage(grad.shape, kernel), grad), kernel[::-1])


def _replicate_correlate(values, kernel, axis):
    return ndimage.correlate1d(values, kernel, axis=axis, mode="nearest")


def _replicate_correlate_adjoint(grad, kernel, axis):
    # transpose of (correlate over an edge-replicated extension): full
    # correlation with the flipped kernel, then fold the extension back
    radius = len(kernel) // 2
    size = grad.shape[axis]
    pad = [(0, 0)] * grad.ndim
    pad[axis] = (radius, radius)
    extended = ndimage.correlate1d(np.pad(grad, pad), kernel[::-1], axis=axis, mode="constant", cval=0.0)

    moved = np.moveaxis(extended, axis, 0)
    folded = moved[radius : radius + size].copy()
    folded[0] += moved[:radius].sum(axis=0)
    folded[-1] += moved[radius + size :].sum(axis=0)
    return np.moveaxis(folded, 0, axis)


def box_mean(values, size=STATS_WINDOW):
    """Local mean over a size x size window with replicate padding."""
    return ndimage.uniform_filter(values, size=size, mode="nearest", axes=(0, 1))


def box_mean_adjoint(grad, size=STATS_WINDOW):
    kernel = np.full(size, 1.0 / size)
    result = _replicate_correlate_adjoint(grad, kernel, axis=0)
    return _replicate_correlate_adjoint(result, kernel, axis=1)


def laplacian(values):
    """5-point Laplacian with replicate padding."""
    return _replicate_correlate(values, _LAPLACE_KERNEL, 0) + _replicate_correlate(values, _LAPLACE_KERNEL, 1)


def laplacian_adjoint(grad):
    return _replicate_correlate_adjoint(grad, _LAPLACE_KERNEL, 0) + _replicate_correlate_adjoint(
        grad, _LAPLACE_KERNEL, 1
    )
