import logging

from apps.cli.base import DefocusCommand
from apps.imaging.models import DepthMap
from apps.imaging.services import load_stack_manifest, save_depth
from apps.metrics.services import depth_metrics
from apps.psf.models import PsfWorkspace
from apps.solver.models import InitChoices, OptimizerChoices
from apps.solver.serializers import SolverConfigSerializer
from apps.solver.services import TEXTURE_THRESHOLD, solve_depth, write_loss_history
from core.utils.exception_handler import DivergenceError
from core.utils.reports import CommandReport

logger = logging.getLogger(__name__)

SOLVER_FLAGS = ("iterations", "step_size", "optimizer", "init", "grid_levels", "seed", "d_min", "d_max", "refine")
LOSS_FLAGS = ("alpha", "lambda_rec", "lambda_smooth", "lambda_sharp")


class Command(DefocusCommand):
    help = "Recover a depth map from a focal-stack manifest"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--manifest", required=True)
        parser.add_argument("--out-depth", required=True)
        parser.add_argument("--out-history")
        parser.add_argument("--depth-format", choices=("f4", "f8"), default="f8")
        parser.add_argument("--iterations", type=int)
        parser.add_argument("--step-size", type=float)
        parser.add_argument("--optimizer", choices=OptimizerChoices.values)
        parser.add_argument("--init", choices=InitChoices.values)
        parser.add_argument("--grid-levels", type=int)
        parser.add_argument("--seed", type=int)
        parser.add_argument("--no-refine", dest="refine", action="store_const", const=False)
        parser.add_argument("--d-min", type=float)
        parser.add_argument("--d-max", type=float)
        parser.add_argument("--alpha", type=float)
        parser.add_argument("--lambda-rec", type=float)
        parser.add_argument("--lambda-smooth", type=float)
        parser.add_argument("--lambda-sharp", type=float)

    def run(self, threads, **options):
        stack = load_stack_manifest(options["manifest"])
        flags = {key: options[key] for key in SOLVER_FLAGS if options.get(key) is not None}
        loss = {key: options[key] for key in LOSS_FLAGS if options.get(key) is not None}
        if loss:
            flags["loss"] = loss
        serializer = SolverConfigSerializer(
            data=flags,
            context={"max_depth_m": stack.max_depth_m, "loss_overrides": stack.loss_overrides},
        )
        serializer.is_valid(raise_exception=True)
        config = serializer.save()

        try:
            result = solve_depth(stack, config, ws=PsfWorkspace.for_camera(stack.camera, threads))
        except DivergenceError as exc:
            if exc.last_depth is not None:
                save_depth(DepthMap(exc.last_depth), options["out_depth"], sample_type=options["depth_format"])
                logger.warning("wrote last finite depth to %s", options["out_depth"])
            raise

        save_depth(result.depth, options["out_depth"], sample_type=options["depth_format"])
        if options["out_history"]:
            write_loss_history(options["out_history"], result.loss_history)

        report = CommandReport(
            slices=len(stack),
            iterations=result.iterations,
            converged=result.converged,
            optimizer=config.optimizer,
            init=config.init,
            d_min=config.d_min,
            d_max=config.d_max,
        )
        report.extend("loss_", result.final_loss.as_dict())
        report.add("out_depth", options["out_depth"])

        if stack.ground_truth_depth is not None:
            mask = result.confidence > TEXTURE_THRESHOLD
            metrics = depth_metrics(result.depth, stack.ground_truth_depth, mask=mask)
            report.add("masked_pixels", int(mask.sum()))
            report.update(**metrics.as_dict())
        return report
