import logging

import numpy as np

from apps.imaging.models import DepthMap, Image
from core.utils.exception_handler import ShapeMismatchError

from . import filters
from .models import LossReport, LossWeights

logger = logging.getLogger(__name__)

SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
CONTRAST_EPSILON = 1e-6


def _pixels(value):
    return value.data if isinstance(value, (Image, DepthMap)) else np.asarray(value, dtype=np.float64)


def _image_array(value):
    data = _pixels(value)
    return data[..., np.newaxis] if data.ndim == 2 else data


def _same_shape(a, b, what):
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what}: shapes {a.shape} and {b.shape} differ")


def _luminance(data):
    return data.mean(axis=2)


def _luminance_adjoint(grad, channels):
    return np.repeat(grad[..., np.newaxis] / channels, channels, axis=2)


class _SsimTerms:
    """Windowed statistics of a pair of images and the per-channel SSIM field."""

    def __init__(self, a, b):
        self.a, self.b = a, b
        self.mu_a = filters.windowed_mean(a)
        self.mu_b = filters.windowed_mean(b)
        e_aa = filters.windowed_mean(a * a)
        e_bb = filters.windowed_mean(b * b)
        e_ab = filters.windowed_mean(a * b)

        self.luminance_num = 2.0 * self.mu_a * self.mu_b + SSIM_C1
        self.structure_num = 2.0 * (e_ab - self.mu_a * self.mu_b) + SSIM_C2
        self.luminance_den = self.mu_a**2 + self.mu_b**2 + SSIM_C1
        self.structure_den = (e_aa - self.mu_a**2) + (e_bb - self.mu_b**2) + SSIM_C2
        self.value = (self.luminance_num * self.structure_num) / (self.luminance_den * self.structure_den)

    def grad_a(self, upstream):
        """Pull an upstream gradient on the SSIM field back to image a."""
        den = self.luminance_den * self.structure_den
        d_mu_a = 2.0 * self.mu_b * (self.structure_num - self.luminance_num) / den - 2.0 * self.mu_a * self.value * (
            1.0 / self.luminance_den - 1.0 / self.structure_den
        )
        d_e_ab = 2.0 * self.luminance_num / den
        d_e_aa = -self.value / self.structure_den
        return (
            filters.windowed_mean_adjoint(upstream * d_mu_a)
            + 2.0 * self.a * filters.windowed_mean_adjoint(upstream * d_e_aa)
            + self.b * filters.windowed_mean_adjoint(upstream * d_e_ab)
        )


def ssim_map(a, b):
    """
    Per-pixel SSIM (11x11 Gaussian window, sigma 1.5, C1 = 0.01^2,
    C2 = 0.03^2), computed per channel and averaged over channels.
    """
    a, b = _image_array(a), _image_array(b)
    _same_shape(a, b, "ssim_map")
    return _SsimTerms(a, b).value.mean(axis=2)


def l_rec(j_hat, j, alpha):
    """
    Reconstruction loss mean(alpha (1 - SSIM) / 2 + (1 - alpha) |j_hat - j|)
    and its gradient with respect to j_hat.
    """
    j_hat, j = _image_array(j_hat), _image_array(j)
    _same_shape(j_hat, j, "l_rec")
    count = j_hat.size
    terms = _SsimTerms(j_hat, j)
    difference = j_hat - j

    value = np.sum(alpha * (1.0 - terms.value) / 2.0 + (1.0 - alpha) * np.abs(difference)) / count
    grad = terms.grad_a(np.full(j_hat.shape, -alpha / (2.0 * count)))
    grad += (1.0 - alpha) * np.sign(difference) / count
    return float(value), grad


def l_smooth(depth, img):
    """
    Edge-aware smoothness mean(|dx D| exp(-|dx I|) + |dy D| exp(-|dy I|))
    with forward differences, and its subgradient with respect to depth.
    """
    depth = _pixels(depth)
    luminance = _luminance(_image_array(img))
    _same_shape(depth, luminance, "l_smooth")
    count = depth.size

    depth_dx = depth[:, 1:] - depth[:, :-1]
    depth_dy = depth[1:, :] - depth[:-1, :]
    weight_x = np.exp(-np.abs(luminance[:, 1:] - luminance[:, :-1]))
    weight_y = np.exp(-np.abs(luminance[1:, :] - luminance[:-1, :]))

    value = (np.sum(np.abs(depth_dx) * weight_x) + np.sum(np.abs(depth_dy) * weight_y)) / count

    grad = np.zeros_like(depth)
    step_x = np.sign(depth_dx) * weight_x / count
    step_y = np.sign(depth_dy) * weight_y / count
    grad[:, 1:] += step_x
    grad[:, :-1] -= step_x
    grad[1:, :] += step_y
    grad[:-1, :] -= step_y
    return float(value), grad


class _SharpnessTerms:
    def __init__(self, luminance):
        self.luminance = luminance
        self.mean = filters.box_mean(luminance)
        self.guarded = np.maximum(self.mean, CONTRAST_EPSILON)
        self.residual = luminance - self.mean
        self.contrast = self.residual / self.guarded
        self.value = -filters.laplacian(luminance) - np.abs(self.contrast) - self.residual**2

    def grad(self, upstream):
        """Pull an upstream gradient on S back to the luminance field."""
        contrast_up = -upstream * np.sign(self.contrast)
        variance_up = -upstream * 2.0 * self.residual
        guarded = (self.mean > CONTRAST_EPSILON).astype(np.float64)

        to_mean = contrast_up * (-1.0 / self.guarded - guarded * self.residual / self.guarded**2) - variance_up
        return (
            -filters.laplacian_adjoint(upstream)
            + contrast_up / self.guarded
            + variance_up
            + filters.box_mean_adjoint(to_mean)
        )


def sharpness(img):
    """
    Per-pixel sharpness S = -Laplacian - contrast visibility - variance of the
    luminance, with 7x7 local means and replicate borders.
    """
    return _SharpnessTerms(_luminance(_image_array(img))).value


def l_sharp(j_hat, j):
    """Mean absolute difference of sharpness fields and its gradient w.r.t. j_hat."""
    j_hat, j = _image_array(j_hat), _image_array(j)
    _same_shape(j_hat, j, "l_sharp")
    predicted = _SharpnessTerms(_luminance(j_hat))
    observed = _SharpnessTerms(_luminance(j))
    difference = predicted.value - observed.value
    count = difference.size

    value = np.sum(np.abs(difference)) / count
    grad = _luminance_adjoint(predicted.grad(np.sign(difference) / count), j_hat.shape[2])
    return float(value), grad


def total_loss(j_hat, j, depth, img, weights: LossWeights):
    """
    Weighted objective for one focused image.

    Returns the report, the gradient with respect to j_hat and the direct
    gradient with respect to depth (smoothness only; the other terms reach
    depth through the PSF backward pass).
    """
    j_hat_data, j_data = _image_array(j_hat), _image_array(j)
    _same_shape(j_hat_data, j_data, "total_loss")

    rec, d_rec = l_rec(j_hat_data, j_data, weights.alpha)
    smooth, d_smooth = l_smooth(depth, img)
    sharp, d_sharp = l_sharp(j_hat_data, j_data)

    report = LossReport.weighted(weights, rec, smooth, sharp)
    d_j_hat = weights.lambda_rec * d_rec + weights.lambda_sharp * d_sharp
    d_depth = weights.lambda_smooth * d_smooth
    return report, d_j_hat, d_depth
