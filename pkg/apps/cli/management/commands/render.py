import numpy as np

from apps.cli.base import DefocusCommand
from apps.cli.services import load_camera
from apps.imaging.services import load_depth, load_image, save_image
from apps.optics.services import coc_map
from apps.psf.models import PsfWorkspace
from apps.psf.services import render_focused
from core.utils.reports import CommandReport


class Command(DefocusCommand):
    help = "Render a focused image from an all-in-focus image and a depth map"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--image", required=True)
        parser.add_argument("--depth", required=True)
        parser.add_argument("--camera-config", required=True)
        parser.add_argument("--focus-m", type=float)
        parser.add_argument("--out", required=True)
        parser.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)

    def run(self, threads, **options):
        img = load_image(options["image"])
        depth = load_depth(options["depth"])
        cam = load_camera(options["camera_config"], options["focus_m"])
        coc = coc_map(cam, depth)
        focused = render_focused(img, coc, PsfWorkspace.for_camera(cam, threads))
        save_image(focused, options["out"], bit_depth=options["bit_depth"])

        return CommandReport(
            out=options["out"],
            focus_m=cam.focus_distance_m,
            coc_min=float(coc.data.min()),
            coc_mean=float(coc.data.mean()),
            coc_max=float(coc.data.max()),
            delta_flagged_pct=100.0 * float(np.mean(coc.in_focus)),
            clamped_pct=100.0 * float(np.mean(coc.clamped)),
        )
