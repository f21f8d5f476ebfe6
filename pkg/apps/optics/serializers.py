from django.conf import settings
from rest_framework import serializers

from core.utils.exception_handler import InvalidCameraError

from .models import CameraIntrinsics


class CameraIntrinsicsSerializer(serializers.Serializer):
    """Serializer for the `camera{...}` block of a manifest or camera config"""

    focal_mm = serializers.FloatField(min_value=0.0)
    f_number = serializers.FloatField(min_value=0.0)
    focus_m = serializers.FloatField(min_value=0.0, required=False)
    pixel_mm = serializers.FloatField(min_value=0.0, required=False)
    scale = serializers.FloatField(min_value=0.0)
    kernel = serializers.IntegerField(min_value=3, required=False)

    def __init__(self, *args, focus_required=True, **kwargs):
        super().__init__(*args, **kwargs)
        self.focus_required = focus_required

    def validate_kernel(self, value):
        if value % 2 == 0:
            raise serializers.ValidationError("kernel must be odd")
        return value

    def validate(self, data):
        """Reject zero-valued lens parameters and a focus inside the focal length"""
        for key in ("focal_mm", "f_number", "scale", "pixel_mm"):
            if key in data and data[key] <= 0:
                raise serializers.ValidationError({key: "must be positive"})
        if "focus_m" not in data:
            if self.focus_required:
                raise serializers.ValidationError({"focus_m": "This field is required."})
        elif data["focus_m"] <= data["focal_mm"] / 1000.0:
            raise serializers.ValidationError(
                {"focus_m": "focus distance must exceed the focal length"}
            )
        return data

    def create(self, validated_data):
        """Build a CameraIntrinsics; a missing focus is filled from `focus_m` in save()"""
        engine = settings.DEFOCUS
        try:
            return CameraIntrinsics(
                focal_length_mm=validated_data["focal_mm"],
                f_number=validated_data["f_number"],
                focus_distance_m=validated_data["focus_m"],
                output_scale=validated_data["scale"],
                pixel_size_mm=validated_data.get("pixel_mm", engine["PIXEL_SIZE_MM"]),
                kernel_size=validated_data.get("kernel", engine["KERNEL_SIZE"]),
            )
        except InvalidCameraError as exc:
            raise serializers.ValidationError(exc.message) from exc
