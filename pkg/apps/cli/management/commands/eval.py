from apps.cli.base import DefocusCommand
from apps.imaging.services import load_depth
from apps.metrics.services import depth_metrics
from core.utils.reports import CommandReport


class Command(DefocusCommand):
    help = "Score a predicted depth map against ground truth"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--pred-depth", required=True)
        parser.add_argument("--gt-depth", required=True)
        parser.add_argument("--cap", type=float, help="Ignore ground truth beyond this depth and clamp predictions")

    def run(self, threads, **options):
        pred = load_depth(options["pred_depth"])
        gt = load_depth(options["gt_depth"])
        metrics = depth_metrics(pred, gt, cap=options["cap"])
        return CommandReport(**metrics.as_dict())
