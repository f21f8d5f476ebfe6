import numpy as np
import pytest

from apps.imaging.models import CocMap, Image
from apps.losses import filters
from apps.losses.models import LossReport, LossWeights
from apps.losses.services import l_rec, l_sharp, l_smooth, sharpness, ssim_map, total_loss
from apps.psf.models import PsfWorkspace
from apps.psf.services import render_focused
from core.utils.exception_handler import ShapeMismatchError

from .conftest import central_difference


class TestSsim:
    """Test ssim_map"""

    def test_identical_images(self, pair):
        """Test SSIM of an image with itself is one everywhere"""
        a, _ = pair

        assert np.all(ssim_map(a, a) == 1.0)

    def test_unrelated_images_score_lower(self, pair):
        """Test two independent noise fields are far from identical"""
        a, b = pair

        assert ssim_map(a, b).mean() < 0.5

    def test_symmetric(self, pair):
        """Test SSIM(a, b) = SSIM(b, a)"""
        a, b = pair

        np.testing.assert_allclose(ssim_map(a, b), ssim_map(b, a), atol=1e-14)

    def test_opposite_constants_score_near_zero(self):
        """Test black against white leaves only the C1 floor, about 1e-4"""
        black, white = np.zeros((12, 12, 1)), np.ones((12, 12, 1))

        assert np.all(ssim_map(black, white) < 0.01)

    def test_bounded(self, pair, rng):
        """Test SSIM stays in [-1, 1], including anti-correlated images"""
        a, b = pair

        for other in (b, 1.0 - a, 0.5 * a + 0.1 * rng.random(a.shape)):
            values = ssim_map(a, other)
            assert values.min() >= -1.0 - 1e-12
            assert values.max() <= 1.0 + 1e-12
        assert ssim_map(a, 1.0 - a).mean() < 0.0

    def test_accepts_images(self, pair):
        """Test Image instances are accepted alongside arrays"""
        a, _ = pair

        assert ssim_map(Image(a), a).shape == (14, 13)


class TestReconstructionLoss:
    """Test l_rec"""

    def test_zero_for_identical_images(self, pair):
        """Test the loss and its gradient vanish at j_hat = j"""
        a, _ = pair

        value, grad = l_rec(a, a, 0.85)

        assert value == 0.0
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)

    def test_pure_l1(self, pair):
        """Test alpha = 0 reduces to mean absolute error"""
        a, b = pair

        value, _ = l_rec(a, b, 0.0)

        assert value == pytest.approx(np.mean(np.abs(a - b)))

    @pytest.mark.parametrize("alpha", [0.0, 0.85, 1.0])
    def test_gradient_matches_finite_difference(self, pair, alpha):
        """Test the analytic gradient at border and interior pixels"""
        a, b = pair
        _, grad = l_rec(a, b, alpha)

        for index in [(0, 0, 0), (7, 6, 1), (13, 12, 2), (0, 12, 1)]:
            numeric = central_difference(lambda v: l_rec(v, b, alpha)[0], a, index)
            assert grad[index] == pytest.approx(numeric, rel=1e-4, abs=1e-10)

    def test_shape_mismatch(self, pair):
        """Test differently sized images raise"""
        a, _ = pair

        with pytest.raises(ShapeMismatchError):
            l_rec(a, a[:5], 0.85)


class TestSmoothnessLoss:
    """Test l_smooth"""

    def test_ramp_on_flat_image(self):
        """Test a unit depth ramp over four columns on a flat image scores 0.75"""
        depth = np.tile(np.arange(1.0, 5.0), (3, 1))
        img = np.full((3, 4, 3), 0.5)

        value, _ = l_smooth(depth, img)

        assert value == pytest.approx(0.75)

    def test_zero_for_constant_depth(self, pair):
        """Test a constant depth map has no smoothness cost"""
        a, _ = pair

        value, grad = l_smooth(np.full((14, 13), 3.0), a)

        assert value == 0.0
        assert not grad.any()

    def test_image_edges_discount_depth_edges(self):
        """Test a depth step aligned with an image edge costs less"""
        depth = np.ones((4, 6))
        depth[:, 3:] = 2.0
        flat = np.full((4, 6, 1), 0.5)
        edged = flat.copy()
        edged[:, 3:] = 1.0

        assert l_smooth(depth, edged)[0] < l_smooth(depth, flat)[0]

    def test_gradient_matches_finite_difference(self, rng, pair):
        """Test the subgradient on a random depth map"""
        a, _ = pair
        depth = rng.uniform(1.0, 5.0, (14, 13))
        _, grad = l_smooth(depth, a)

        for index in [(0, 0), (6, 6), (13, 12), (13, 0)]:
            numeric = central_difference(lambda v: l_smooth(v, a)[0], depth, index)
            assert grad[index] == pytest.approx(numeric, rel=1e-4, abs=1e-10)


class TestSharpness:
    """Test sharpness and l_sharp"""

    def test_point_source_center(self, point_source):
        """Test S = 4 - 48 - (48/49)^2 at an isolated bright pixel"""
        field = sharpness(point_source)

        assert field[7, 7] == pytest.approx(4.0 - 48.0 - (48.0 / 49.0) ** 2)

    def test_blur_lowers_laplacian_energy(self, rng):
        """Test a PSF-blurred random image has a smaller mean |Laplacian|"""
        img = Image(rng.random((16, 16, 1)))
        blurred = render_focused(img, CocMap(np.full((16, 16), 3.0)), PsfWorkspace())

        original = np.abs(filters.laplacian(img.luminance())).mean()
        softened = np.abs(filters.laplacian(blurred.luminance())).mean()

        assert softened < original

    def test_zero_for_identical_images(self, pair):
        """Test l_sharp vanishes at j_hat = j"""
        a, _ = pair

        value, grad = l_sharp(a, a)

        assert value == 0.0
        assert not grad.any()

    def test_gradient_matches_finite_difference(self, pair):
        """Test the sharpness gradient at border and interior pixels"""
        a, b = pair
        _, grad = l_sharp(a, b)

        for index in [(0, 0, 0), (7, 6, 2), (13, 12, 1), (3, 0, 0)]:
            numeric = central_difference(lambda v: l_sharp(v, b)[0], a, index)
            assert grad[index] == pytest.approx(numeric, rel=1e-4, abs=1e-10)

    def test_symmetric(self, pair):
        """Test l_sharp(a, b) = l_sharp(b, a)"""
        a, b = pair

        assert l_sharp(a, b)[0] == l_sharp(b, a)[0]

    def test_gradient_spreads_over_channels(self, pair):
        """Test the luminance adjoint gives every channel the same share"""
        a, b = pair
        _, grad = l_sharp(a, b)

        np.testing.assert_array_equal(grad[..., 0], grad[..., 1])


class TestTotalLoss:
    """Test total_loss"""

    def test_combines_terms_with_weights(self, pair, rng):
        """Test the report and both gradients follow the lambdas"""
        a, b = pair
        depth = rng.uniform(1.0, 5.0, (14, 13))
        weights = LossWeights(alpha=0.5, lambda_rec=2.0, lambda_smooth=0.1, lambda_sharp=0.3)

        report, d_j_hat, d_depth = total_loss(a, b, depth, a, weights)

        rec, d_rec = l_rec(a, b, 0.5)
        smooth, d_smooth = l_smooth(depth, a)
        sharp, d_sharp = l_sharp(a, b)
        assert report.total == pytest.approx(2.0 * rec + 0.1 * smooth + 0.3 * sharp)
        np.testing.assert_allclose(d_j_hat, 2.0 * d_rec + 0.3 * d_sharp)
        np.testing.assert_allclose(d_depth, 0.1 * d_smooth)

    def test_zero_weights_give_zero_loss(self, pair, rng):
        """Test all-zero lambdas switch the objective off"""
        a, b = pair
        weights = LossWeights(alpha=0.0, lambda_rec=0.0, lambda_smooth=0.0, lambda_sharp=0.0)

        report, d_j_hat, d_depth = total_loss(a, b, rng.uniform(1.0, 5.0, (14, 13)), a, weights)

        assert report.total == 0.0
        assert report.rec > 0.0
        assert not d_j_hat.any() and not d_depth.any()

    def test_total_is_the_weighted_sum_of_its_terms(self, pair, rng):
        """Test total = sum of lambda * term, also after averaging reports"""
        a, b = pair
        weights = LossWeights(alpha=0.3, lambda_rec=1.5, lambda_smooth=0.02, lambda_sharp=0.4)
        reports = [total_loss(a, b, rng.uniform(1.0, 5.0, (14, 13)), a, weights)[0] for _ in range(3)]
        reports.append(total_loss(b, a, rng.uniform(1.0, 5.0, (14, 13)), b, weights)[0])

        for report in reports + [LossReport.mean(reports)]:
            expected = 1.5 * report.rec + 0.02 * report.smooth + 0.4 * report.sharp
            assert abs(report.total - expected) < 1e-12
