from apps.cli.base import DefocusCommand
from apps.cli.services import load_camera
from apps.imaging.services import load_depth, load_image, save_stack_manifest
from apps.psf.models import PsfWorkspace
from apps.solver.services import focal_sequence, render_stack
from core.utils.reports import CommandReport


class Command(DefocusCommand):
    help = "Render a focal stack along the focal sequence and write it with a manifest"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--image", required=True)
        parser.add_argument("--depth", required=True)
        parser.add_argument("--camera-config", required=True)
        parser.add_argument("--n-slices", type=int, required=True)
        parser.add_argument("--max-depth-m", type=float, required=True)
        parser.add_argument("--out-dir", required=True)
        parser.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)

    def run(self, threads, **options):
        distances = focal_sequence(options["n_slices"], options["max_depth_m"])
        img = load_image(options["image"])
        depth = load_depth(options["depth"], max_depth_m=options["max_depth_m"])
        cam = load_camera(options["camera_config"], focus_m=distances[0])

        stack = render_stack(
            img, depth, cam, distances, ws=PsfWorkspace.for_camera(cam, threads), max_depth_m=options["max_depth_m"]
        )
        manifest = save_stack_manifest(stack, options["out_dir"], bit_depth=options["bit_depth"])
        return CommandReport(slices=len(stack), focus_distances_m=distances, manifest=str(manifest))
