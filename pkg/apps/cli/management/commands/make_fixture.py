from apps.cli.base import DefocusCommand
from apps.imaging.services import save_stack_manifest
from apps.psf.models import PsfWorkspace
from apps.solver.services import focal_sequence, render_stack, synthetic_camera, synthetic_two_plane_scene
from core.utils.reports import CommandReport


class Command(DefocusCommand):
    help = "Write the synthetic two-plane scene and its rendered focal stack"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--out-dir", required=True)
        parser.add_argument("--size", type=int, default=64)
        parser.add_argument("--max-depth-m", type=float, default=10.0)
        parser.add_argument("--n-slices", type=int, default=2)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--bit-depth", type=int, choices=(8, 16), default=16)

    def run(self, threads, **options):
        distances = focal_sequence(options["n_slices"], options["max_depth_m"])
        img, depth = synthetic_two_plane_scene(
            size=options["size"], max_depth_m=options["max_depth_m"], seed=options["seed"]
        )
        cam = synthetic_camera(distances[0])
        stack = render_stack(img, depth, cam, distances, ws=PsfWorkspace.for_camera(cam, threads))
        manifest = save_stack_manifest(stack, options["out_dir"], bit_depth=options["bit_depth"])
        return CommandReport(size=options["size"], slices=len(stack), focus_distances_m=distances, manifest=str(manifest))
