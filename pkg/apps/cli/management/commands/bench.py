from apps.cli.base import DefocusCommand
from apps.cli.services import BenchmarkService


class Command(DefocusCommand):
    help = "Time the optimized PSF layer against the loop reference"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--size", type=int, default=128)
        parser.add_argument("--kernel", type=int, default=7)
        parser.add_argument("--repeat", type=int, default=3)
        parser.add_argument("--channels", type=int, choices=(1, 3), default=3)
        parser.add_argument("--seed", type=int, default=0)

    def run(self, threads, **options):
        return BenchmarkService.run(
            size=options["size"],
            kernel=options["kernel"],
            repeat=options["repeat"],
            channels=options["channels"],
            threads=threads,
            seed=options["seed"],
        )
