from apps.cli.base import DefocusCommand
from apps.psf.models import PsfWorkspace
from apps.solver.serializers import SolverConfigSerializer
from apps.solver.services import FOCAL_SEQUENCE, synthetic_camera, synthetic_two_plane_scene, sweep_focus
from core.utils.exception_handler import InvalidConfigError
from core.utils.reports import CommandReport


def parse_fractions(text):
    try:
        fractions = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise InvalidConfigError(f"--fractions must be comma-separated numbers, got {text!r}") from exc
    if not fractions or not all(0 < f < 1 for f in fractions):
        raise InvalidConfigError("--fractions must lie strictly between 0 and 1")
    return fractions


class Command(DefocusCommand):
    help = "Single-slice solves on the synthetic scene across focus distances"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--size", type=int, default=64)
        parser.add_argument("--max-depth-m", type=float, default=10.0)
        parser.add_argument("--fractions", default=",".join(str(f) for f in FOCAL_SEQUENCE))
        parser.add_argument("--iterations", type=int)
        parser.add_argument("--seed", type=int, default=0)

    def run(self, threads, **options):
        fractions = parse_fractions(options["fractions"])
        flags = {"seed": options["seed"]}
        if options["iterations"] is not None:
            flags["iterations"] = options["iterations"]
        serializer = SolverConfigSerializer(data=flags, context={"max_depth_m": options["max_depth_m"]})
        serializer.is_valid(raise_exception=True)
        config = serializer.save()

        img, depth = synthetic_two_plane_scene(size=options["size"], max_depth_m=options["max_depth_m"], seed=options["seed"])
        cam = synthetic_camera(fractions[0] * options["max_depth_m"])
        rows = sweep_focus(
            img, depth, cam, fractions, config, options["max_depth_m"], ws=PsfWorkspace.for_camera(cam, threads)
        )
        report = CommandReport(size=options["size"], fractions=fractions)
        for fraction, focus, score in rows:
            report.add(f"abs_rel_{fraction:g}", score)
        best = min(rows, key=lambda row: row[2])
        report.add("best_focus_m", best[1])
        return report
