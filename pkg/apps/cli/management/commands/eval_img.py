from apps.cli.base import DefocusCommand
from apps.imaging.services import load_image
from apps.metrics.services import image_metrics
from core.utils.reports import CommandReport


class Command(DefocusCommand):
    help = "PSNR and mean SSIM between two images"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--a", required=True)
        parser.add_argument("--b", required=True)

    def run(self, threads, **options):
        metrics = image_metrics(load_image(options["a"]), load_image(options["b"]))
        return CommandReport(**metrics.as_dict())
