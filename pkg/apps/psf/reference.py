"""Literal loop implementations of the PSF layer, kept as an oracle.

No tiling, vectorization or precomputation: every output pixel walks the offset
set directly. Slow by construction; used by tests, `gradcheck` and `bench`.
"""

import math

import numpy as np

from apps.imaging.models import CocMap, Image

from .models import GradientPair, PsfWorkspace
from .services import _check_shapes


def _weight(u, v, c):
    return (2.0 / (math.pi * c * c)) * math.exp(-2.0 * (u * u + v * v) / (c * c))


def _source_weight(u, v, coc_values, delta, sx, sy):
    if delta[sx][sy]:
        return 1.0 if u == 0 and v == 0 else 0.0
    return _weight(u, v, coc_values[sx][sy])


def render_focused_reference(img: Image, coc: CocMap, ws: PsfWorkspace) -> Image:
    """Quadruple-loop evaluation of the scatter-normalized convolution."""
    _check_shapes(img, coc)
    height, width, channels = img.data.shape
    pixels = img.data.tolist()
    coc_values = coc.data.tolist()
    delta = coc.in_focus.tolist()
    offsets = [(int(u), int(v)) for u, v in ws.offsets]

    output = np.zeros((height, width, channels))
    for x in range(height):
        for y in range(width):
            numerator = [0.0] * channels
            total = 0.0
            for u, v in offsets:
                sx, sy = x - u, y - v
                if not (0 <= sx < height and 0 <= sy < width):
                    continue
                weight = _source_weight(u, v, coc_values, delta, sx, sy)
                total += weight
                for k in range(channels):
                    numerator[k] += weight * pixels[sx][sy][k]
            for k in range(channels):
                output[x, y, k] = numerator[k] / total
    return Image(output)


def backward_reference(d_loss_d_j, img: Image, coc: CocMap, j: Image, ws: PsfWorkspace) -> GradientPair:
    """Loop evaluation of the PSF backward pass, walking outputs then offsets."""
    upstream = np.asarray(getattr(d_loss_d_j, "data", d_loss_d_j), dtype=np.float64)
    _check_shapes(img, coc, ("dL/dJ", upstream), ("j", j.data))
    height, width, channels = img.data.shape
    pixels = img.data.tolist()
    rendered = j.data.tolist()
    grads = upstream.tolist()
    coc_values = coc.data.tolist()
    delta = coc.in_focus.tolist()
    offsets = [(int(u), int(v)) for u, v in ws.offsets]

    d_image = np.zeros((height, width, channels))
    d_coc = np.zeros((height, width))
    for s in range(height):
        for t in range(width):
            total = 0.0
            for u, v in offsets:
                sx, sy = s - u, t - v
                if 0 <= sx < height and 0 <= sy < width:
                    total += _source_weight(u, v, coc_values, delta, sx, sy)
            for u, v in offsets:
                x, y = s - u, t - v
                if not (0 <= x < height and 0 <= y < width):
                    continue
                weight = _source_weight(u, v, coc_values, delta, x, y)
                for k in range(channels):
                    d_image[x, y, k] += grads[s][t][k] * weight / total
                if delta[x][y]:
                    continue
                c = coc_values[x][y]
                xi = (4.0 * (u * u + v * v) - 2.0 * c * c) / (c * c * c)
                for k in range(channels):
                    d_coc[x, y] += grads[s][t][k] * xi * (pixels[x][y][k] - rendered[s][t][k]) * weight / total
    return GradientPair(d_image=d_image, d_coc=d_coc)
