"""The PSF convolutional layer.

Each source pixel scatters its intensity through a Gaussian whose diameter is
the source pixel's own CoC; every output divides by the weight it received so
effective kernels sum to one. Offsets falling outside the image add to neither
sum. Pixels flagged in-focus scatter through a delta kernel.

Rows are split into contiguous bands processed by a thread pool. Bands are
disjoint and every pixel accumulates offsets in the workspace's row-major
order, so threaded and sequential runs give bit-identical results.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from apps.imaging.models import CocMap, DepthMap, Image
from apps.optics.services import d_coc_d_depth
from core.utils.exception_handler import ShapeMismatchError

from .models import GradientPair, PsfWorkspace

logger = logging.getLogger(__name__)


def _gaussian(r2, c):
    return (2.0 / (np.pi * c * c)) * np.exp(-2.0 * r2 / (c * c))


def gaussian_weight(u, v, c):
    """PSF weight 2/(pi c^2) exp(-2 (u^2 + v^2) / c^2) for a CoC of c >= 1 pixels."""
    return _gaussian(u * u + v * v, c)


def _check_shapes(img, coc, *others):
    if img.shape != coc.shape:
        raise ShapeMismatchError(f"image {img.shape} and CoC map {coc.shape} differ in size")
    for name, array in others:
        if array.shape != img.data.shape:
            raise ShapeMismatchError(f"{name} has shape {array.shape}, expected {img.data.shape}")


def _source_planes(coc: CocMap, ws: PsfWorkspace, padded):
    """
    Weight and d(weight)/dC planes per distinct u^2 + v^2, indexed by source
    pixel. With `padded` the planes carry a zero border of kernel radius.
    """
    radius = ws.radius if padded else 0
    blurred = np.pad(~coc.in_focus, radius, constant_values=False)
    delta = np.pad(coc.in_focus, radius, constant_values=False)
    c = np.where(blurred, np.pad(coc.data, radius, constant_values=1.0), 1.0)

    weights, slopes = {}, {}
    for r2 in ws.squared_radii:
        weight = np.where(blurred, _gaussian(r2, c), 0.0)
        if r2 == 0:
            weight = np.where(delta, 1.0, weight)
        xi = (4.0 * r2 - 2.0 * c * c) / (c * c * c)
        weights[r2] = weight
        slopes[r2] = np.where(blurred, xi * weight, 0.0)
    return weights, slopes


def _run_bands(ws, height, work):
    bands = ws.row_bands(height)
    if len(bands) == 1:
        work(*bands[0])
        return
    with ThreadPoolExecutor(max_workers=len(bands)) as pool:
        for future in [pool.submit(work, start, stop) for start, stop in bands]:
            future.result()


def _scatter(image, coc, ws):
    height, width, channels = image.data.shape
    radius = ws.radius
    weights, _ = _source_planes(coc, ws, padded=True)
    source = np.pad(image.data, ((radius, radius), (radius, radius), (0, 0)))
    numerator, denominator = ws.accumulators(height, width, channels)

    def accumulate(start, stop):
        for u, v in ws.offsets:
            rows = slice(radius - u + start, radius - u + stop)
            cols = slice(radius - v, radius - v + width)
            weight = weights[u * u + v * v][rows, cols]
            numerator[start:stop] += weight[..., np.newaxis] * source[rows, cols]
            denominator[start:stop] += weight

    _run_bands(ws, height, accumulate)
    return numerator, denominator


def render_focused(img: Image, coc: CocMap, ws: PsfWorkspace) -> Image:
    """Render the focused image J = (I (*) F) for a CoC map."""
    _check_shapes(img, coc)
    numerator, denominator = _scatter(img, coc, ws)
    return Image(numerator / denominator[..., np.newaxis])


def denominator(coc: CocMap, ws: PsfWorkspace, channels=1):
    """Total PSF weight each output pixel receives."""
    height, width = coc.shape
    blank = Image(np.zeros((height, width, channels)))
    return _scatter(blank, coc, ws)[1].copy()


def backward(d_loss_d_j, img: Image, coc: CocMap, j: Image, ws: PsfWorkspace, *, xi_sign=1.0) -> GradientPair:
    """
    Gradients of a loss w.r.t. the all-in-focus image and the CoC map, given
    dL/dJ and the forward output j.

    d_image[x] = sum over outputs s reached from x of dL/dJ[s] w / den[s]
    d_coc[x]   = sum over the same s and channels of
                 dL/dJ[s] xi (I[x] - J[s]) w / den[s]

    `j` must be the forward output for (img, coc); this is not verified.
    `xi_sign` flips the sign of xi and exists only as a negative control for
    gradient checks.
    """
    upstream = d_loss_d_j.data if isinstance(d_loss_d_j, Image) else np.asarray(d_loss_d_j, dtype=np.float64)
    _check_shapes(img, coc, ("dL/dJ", upstream), ("j", j.data))

    height, width, channels = img.data.shape
    radius = ws.radius
    padding = ((radius, radius), (radius, radius), (0, 0))
    weights, slopes = _source_planes(coc, ws, padded=False)
    scaled = np.pad(upstream / denominator(coc, ws)[..., np.newaxis], padding)
    rendered = np.pad(j.data, padding)
    source = img.data

    d_image = np.zeros((height, width, channels))
    d_coc = np.zeros((height, width))

    def gather(start, stop):
        for u, v in ws.offsets:
            rows = slice(radius + u + start, radius + u + stop)
            cols = slice(radius + v, radius + v + width)
            r2 = u * u + v * v
            incoming = scaled[rows, cols]
            d_image[start:stop] += weights[r2][start:stop, :, np.newaxis] * incoming
            d_coc[start:stop] += slopes[r2][start:stop] * np.sum(
                (source[start:stop] - rendered[rows, cols]) * incoming, axis=2
            )

    _run_bands(ws, height, gather)
    return GradientPair(d_image=d_image, d_coc=xi_sign * d_coc)


def backward_to_depth(grad: GradientPair, cam, depth: DepthMap):
    """Chain dL/dC to depth: dL/dD = dL/dC * dC/dD (zero wherever a clamp applies)."""
    if grad.d_coc.shape != depth.shape:
        raise ShapeMismatchError(f"gradient {grad.d_coc.shape} and depth {depth.shape} differ in size")
    return grad.d_coc * d_coc_d_depth(cam, depth.data)
