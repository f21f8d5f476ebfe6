from django.conf import settings
from rest_framework import serializers

from core.utils.exception_handler import InvalidConfigError

from .models import LossWeights


class LossWeightsSerializer(serializers.Serializer):
    """Serializer for loss weight overrides; missing keys fall back to settings"""

    alpha = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)
    lambda_rec = serializers.FloatField(min_value=0.0, required=False)
    lambda_smooth = serializers.FloatField(min_value=0.0, required=False)
    lambda_sharp = serializers.FloatField(min_value=0.0, required=False)

    @staticmethod
    def defaults():
        configured = settings.DEFOCUS["LOSS_WEIGHTS"]
        return {
            "alpha": configured["ALPHA"],
            "lambda_rec": configured["LAMBDA_REC"],
            "lambda_smooth": configured["LAMBDA_SMOOTH"],
            "lambda_sharp": configured["LAMBDA_SHARP"],
        }

    def create(self, validated_data):
        try:
            return LossWeights(**{**self.defaults(), **validated_data})
        except InvalidConfigError as exc:
            raise serializers.ValidationError(exc.message) from exc
