import logging
import statistics
import time
from io import StringIO

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError

from apps.imaging.models import CocMap, DepthMap, Image
from apps.imaging.services import read_yaml
from apps.losses.models import LossWeights
from apps.losses.services import l_rec, l_sharp, l_smooth
from apps.optics.serializers import CameraIntrinsicsSerializer
from apps.optics.services import coc_map
from apps.psf import reference
from apps.psf.models import PsfWorkspace
from apps.psf.services import backward, backward_to_depth, render_focused
from apps.solver.services import DepthObjective, render_stack, synthetic_camera
from core.utils.exception_handler import EXIT_SUCCESS, CheckFailure, InvalidConfigError, command_exception_handler
from core.utils.reports import CommandReport

from .models import CommandOutcome

logger = logging.getLogger(__name__)

PSF_TOLERANCE = 1e-5
CHAIN_TOLERANCE = 1e-4
MATCH_TOLERANCE = 1e-12


def run_command(name, *args, **options):
    """Run a management command in-process and capture its outcome."""
    stdout = StringIO()
    try:
        call_command(name, *args, stdout=stdout, **options)
    except CommandError as exc:
        report = stdout.getvalue().rstrip("\n")
        if "error:" not in report:
            handled = command_exception_handler(exc)
            report = f"{report}\n{handled.report}".lstrip("\n")
        return CommandOutcome(exit_code=exc.returncode, report=report)
    return CommandOutcome(exit_code=EXIT_SUCCESS, report=stdout.getvalue().rstrip("\n"))


def load_camera(path, focus_m=None):
    """Read a camera YAML; --focus-m replaces the file's focus distance."""
    data = read_yaml(path)
    if focus_m is not None:
        data["focus_m"] = focus_m
    serializer = CameraIntrinsicsSerializer(data=data)
    serializer.is_valid(raise_exception=True)
    return serializer.save()


def relative_error(analytic, numeric):
    """max|a - n| / max(max|n|, max|a|, 1e-12)."""
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    scale = max(np.max(np.abs(numeric)), np.max(np.abs(analytic)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def _central_difference(function, values, index, step):
    plus, minus = values.copy(), values.copy()
    plus[index] += step
    minus[index] -= step
    return (function(plus) - function(minus)) / (2.0 * step)


class GradientCheckService:
    """Finite-difference checks of every analytic gradient in the engine"""

    SUITES = {
        "psf_image": PSF_TOLERANCE,
        "psf_coc": PSF_TOLERANCE,
        "depth_chain": CHAIN_TOLERANCE,
        "loss_rec": CHAIN_TOLERANCE,
        "loss_smooth": CHAIN_TOLERANCE,
        "loss_sharp": CHAIN_TOLERANCE,
        "objective": CHAIN_TOLERANCE,
    }

    @staticmethod
    def _probes(rng, shape, count):
        """Random coordinates inside an array of `shape`, borders included."""
        flat = rng.choice(int(np.prod(shape)), size=min(count, int(np.prod(shape))), replace=False)
        return [np.unravel_index(int(i), shape) for i in flat]

    @staticmethod
    def _compare(analytic, function, values, probes, step):
        numeric = [_central_difference(function, values, index, step) for index in probes]
        return relative_error([analytic[index] for index in probes], numeric)

    @staticmethod
    def check_instance(rng, size, ws, probes=8, corrupt=False):
        """Max relative error per suite on one random instance."""
        channels = int(rng.choice([1, 3]))
        height, width = size
        img = rng.random((height, width, channels))
        coc = rng.uniform(1.5, 5.0, (height, width))
        upstream = rng.standard_normal((height, width, channels))
        xi_sign = -1.0 if corrupt else 1.0
        errors = {}

        def probe_loss(image_values, coc_values):
            flags = np.zeros(coc_values.shape, dtype=bool)
            rendered = render_focused(Image(image_values), CocMap(coc_values, in_focus=flags), ws)
            return float(np.sum(upstream * rendered.data))

        coc_state = CocMap(coc, in_focus=np.zeros(coc.shape, dtype=bool))
        rendered = render_focused(Image(img), coc_state, ws)
        pair = backward(upstream, Image(img), coc_state, rendered, ws, xi_sign=xi_sign)
        errors["psf_image"] = GradientCheckService._compare(
            pair.d_image, lambda v: probe_loss(v, coc), img, GradientCheckService._probes(rng, img.shape, probes), 1e-6
        )
        errors["psf_coc"] = GradientCheckService._compare(
            pair.d_coc, lambda v: probe_loss(img, v), coc, GradientCheckService._probes(rng, coc.shape, probes), 1e-5
        )

        # depths behind the focus plane keep the CoC inside (1, m - 1)
        cam = synthetic_camera(2.0)
        depth = rng.uniform(3.0, 6.0, (height, width))

        def depth_loss(values):
            rendered = render_focused(Image(img), coc_map(cam, DepthMap(values)), ws)
            return float(np.sum(upstream * rendered.data))

        depth_coc = coc_map(cam, DepthMap(depth))
        rendered = render_focused(Image(img), depth_coc, ws)
        pair = backward(upstream, Image(img), depth_coc, rendered, ws, xi_sign=xi_sign)
        chained = backward_to_depth(pair, cam, DepthMap(depth))
        errors["depth_chain"] = GradientCheckService._compare(
            chained, depth_loss, depth, GradientCheckService._probes(rng, depth.shape, probes), 1e-6
        )

        target = rng.random(img.shape)
        image_probes = GradientCheckService._probes(rng, img.shape, probes)
        _, grad = l_rec(img, target, 0.85)
        errors["loss_rec"] = GradientCheckService._compare(
            grad, lambda v: l_rec(v, target, 0.85)[0], img, image_probes, 1e-6
        )
        _, grad = l_sharp(img, target)
        errors["loss_sharp"] = GradientCheckService._compare(
            grad, lambda v: l_sharp(v, target)[0], img, image_probes, 1e-6
        )
        _, grad = l_smooth(depth, img)
        errors["loss_smooth"] = GradientCheckService._compare(
            grad, lambda v: l_smooth(v, img)[0], depth, GradientCheckService._probes(rng, depth.shape, probes), 1e-6
        )

        stack = render_stack(Image(img), DepthMap(rng.uniform(3.0, 6.0, (height, width))), cam, [2.0, 2.5], ws=ws)
        objective = DepthObjective(stack, LossWeights(), ws)
        _, grad = objective.evaluate(depth)
        errors["objective"] = GradientCheckService._compare(
            grad, lambda v: objective.evaluate(v)[0].total, depth,
            GradientCheckService._probes(rng, depth.shape, probes), 1e-7,
        )
        return errors

    @staticmethod
    def run(seed=0, size=16, instances=50, probes=8, threads=1, corrupt=False):
        """
        Check `instances` random problems of 8x8 up to size x size pixels with
        m = 7 and CoC in [1.5, 5]. Returns (report, failures).
        """
        if not 4 <= size <= 64:
            raise InvalidConfigError(f"--size must be in 4..64, got {size}")
        if instances < 1 or probes < 1:
            raise InvalidConfigError("--instances and --probes must be at least 1")
        rng = np.random.default_rng(seed)
        ws = PsfWorkspace(kernel_size=7, threads=threads)
        worst = dict.fromkeys(GradientCheckService.SUITES, 0.0)
        low = min(8, size)
        for _ in range(instances):
            shape = tuple(int(n) for n in rng.integers(low, size + 1, size=2))
            errors = GradientCheckService.check_instance(rng, shape, ws, probes=probes, corrupt=corrupt)
            for suite, error in errors.items():
                worst[suite] = max(worst[suite], error)

        report = CommandReport(seed=seed, size=size, instances=instances)
        failures = []
        for suite, tolerance in GradientCheckService.SUITES.items():
            passed = worst[suite] < tolerance
            report.add(f"{suite}_max_rel_err", worst[suite]).add(f"{suite}_pass", passed)
            if not passed:
                failures.append(suite)
        report.add("status", "fail" if failures else "pass")
        logger.info("gradient check finished: %s", "fail" if failures else "pass")
        return report, failures


class BenchmarkService:
    """Times the optimized PSF layer against the loop reference"""

    @staticmethod
    def _median_ms(function, repeat):
        samples = []
        for _ in range(repeat):
            start = time.perf_counter()
            function()
            samples.append((time.perf_counter() - start) * 1000.0)
        return statistics.median(samples)

    @staticmethod
    def run(size=64, kernel=7, repeat=3, channels=3, threads=1, seed=0):
        if size < 64:
            raise InvalidConfigError(f"--size must be at least 64, got {size}")
        if repeat < 1:
            raise InvalidConfigError("--repeat must be at least 1")
        rng = np.random.default_rng(seed)
        img = Image(rng.random((size, size, channels)))
        coc = CocMap(rng.uniform(0.5, kernel - 1.0, (size, size)))
        upstream = rng.standard_normal(img.data.shape)
        fast = PsfWorkspace(kernel_size=kernel, threads=threads)
        slow = PsfWorkspace(kernel_size=kernel, threads=1)

        rendered = render_focused(img, coc, fast)
        rendered_ref = reference.render_focused_reference(img, coc, slow)
        pair = backward(upstream, img, coc, rendered, fast)
        pair_ref = reference.backward_reference(upstream, img, coc, rendered, slow)
        mismatch = max(
            float(np.max(np.abs(rendered.data - rendered_ref.data))),
            float(np.max(np.abs(pair.d_image - pair_ref.d_image))),
            float(np.max(np.abs(pair.d_coc - pair_ref.d_coc))),
        )
        if not mismatch <= MATCH_TOLERANCE:
            raise CheckFailure(f"optimized and reference outputs differ by {mismatch:.3g}")

        forward = BenchmarkService._median_ms(lambda: render_focused(img, coc, fast), repeat)
        forward_ref = BenchmarkService._median_ms(lambda: reference.render_focused_reference(img, coc, slow), repeat)
        backward_ms = BenchmarkService._median_ms(lambda: backward(upstream, img, coc, rendered, fast), repeat)
        backward_ref = BenchmarkService._median_ms(
            lambda: reference.backward_reference(upstream, img, coc, rendered, slow), repeat
        )
        return CommandReport(
            size=size,
            channels=channels,
            kernel=kernel,
            threads=threads,
            repeat=repeat,
            max_abs_diff=mismatch,
            forward_ms=forward,
            forward_reference_ms=forward_ref,
            forward_speedup=forward_ref / forward,
            backward_ms=backward_ms,
            backward_reference_ms=backward_ref,
            backward_speedup=backward_ref / backward_ms,
        )
