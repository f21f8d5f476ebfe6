from django.conf import settings

from apps.cli.base import DefocusCommand
from apps.cli.services import GradientCheckService
from core.utils.exception_handler import CheckFailure


class Command(DefocusCommand):
    help = "Compare every analytic gradient with central finite differences"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--size", type=int, default=16, help="Largest instance side, at most 64")
        parser.add_argument("--instances", type=int, default=50)
        parser.add_argument("--probes", type=int, default=8, help="Finite-difference probes per gradient")
        if settings.DEFOCUS["ENABLE_NEGATIVE_CONTROLS"]:
            parser.add_argument("--corrupt", action="store_true", help="Flip the sign of xi (negative control)")

    def run(self, threads, **options):
        report, failures = GradientCheckService.run(
            seed=options["seed"],
            size=options["size"],
            instances=options["instances"],
            probes=options["probes"],
            threads=threads,
            corrupt=options.get("corrupt", False),
        )
        if failures:
            self.stdout.write(report.render())
            raise CheckFailure(f"gradient check failed for {', '.join(failures)}")
        return report
