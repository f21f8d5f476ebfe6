from pathlib import Path

from rest_framework import serializers

from apps.losses.serializers import LossWeightsSerializer
from apps.optics.serializers import CameraIntrinsicsSerializer

from .models import FocalSlice, FocalStack
from .services import load_depth, load_image


class FocalSliceSerializer(serializers.Serializer):
    """Serializer for one `slice{path, focus_m}` entry"""

    path = serializers.CharField()
    focus_m = serializers.FloatField()


class StackManifestSerializer(serializers.Serializer):
    """
    Serializer for a focal-stack manifest. Paths are resolved against the
    `base_dir` passed in the serializer context.
    """

    all_in_focus = serializers.CharField()
    max_depth_m = serializers.FloatField(required=False)
    camera = CameraIntrinsicsSerializer(focus_required=False)
    slices = FocalSliceSerializer(many=True)
    ground_truth = serializers.CharField(required=False)
    loss = LossWeightsSerializer(required=False)

    def validate_max_depth_m(self, value):
        if value <= 0:
            raise serializers.ValidationError("must be positive")
        return value

    def validate_slices(self, value):
        """Reject duplicate focus distances before any file is read"""
        distances = [entry["focus_m"] for entry in value]
        duplicates = sorted({d for d in distances if distances.count(d) > 1})
        if duplicates:
            raise serializers.ValidationError(
                f"duplicate focus distance {', '.join(f'{d:g}' for d in duplicates)} m"
            )
        return value

    def validate(self, data):
        """Each focus distance has to exceed the focal length"""
        focal_m = data["camera"]["focal_mm"] / 1000.0
        for index, entry in enumerate(data["slices"]):
            if entry["focus_m"] <= focal_m:
                raise serializers.ValidationError(
                    {"slices": f"slice {index} focus distance {entry['focus_m']:g} m does not exceed the focal length"}
                )
        return data

    def _resolve(self, relative):
        base_dir = Path(self.context.get("base_dir", "."))
        path = Path(relative)
        return path if path.is_absolute() else base_dir / path

    def create(self, validated_data):
        """Load every referenced raster and build a validated FocalStack"""
        slices_data = validated_data["slices"]
        camera_data = dict(validated_data["camera"])
        if slices_data:
            camera_data.setdefault("focus_m", slices_data[0]["focus_m"])
        camera_serializer = CameraIntrinsicsSerializer(data=camera_data)
        camera_serializer.is_valid(raise_exception=True)
        camera = camera_serializer.save()

        max_depth = validated_data.get("max_depth_m")
        all_in_focus = load_image(self._resolve(validated_data["all_in_focus"]))
        slices = [
            FocalSlice(image=load_image(self._resolve(entry["path"])), focus_distance_m=entry["focus_m"])
            for entry in slices_data
        ]
        ground_truth = None
        if validated_data.get("ground_truth"):
            ground_truth = load_depth(self._resolve(validated_data["ground_truth"]), max_depth_m=max_depth)
        return FocalStack(
            all_in_focus=all_in_focus,
            slices=slices,
            camera=camera,
            ground_truth_depth=ground_truth,
            max_depth_m=max_depth,
            loss_overrides=dict(validated_data.get("loss", {})),
        )
