from django.conf import settings
from rest_framework import serializers

from apps.losses.serializers import LossWeightsSerializer
from core.utils.exception_handler import InvalidConfigError

from .models import InitChoices, OptimizerChoices, SolverConfig


class SolverConfigSerializer(serializers.Serializer):
    """
    Serializer for solver flags. Unset keys fall back to settings; loss
    weights fall back to the manifest overrides passed in the context, then
    to settings. Depth bounds default to a fraction of `max_depth_m`.
    """

    iterations = serializers.IntegerField(min_value=1, required=False)
    step_size = serializers.FloatField(required=False)
    optimizer = serializers.ChoiceField(choices=OptimizerChoices.choices, required=False)
    init = serializers.ChoiceField(choices=InitChoices.choices, required=False)
    grid_levels = serializers.IntegerField(min_value=2, required=False)
    seed = serializers.IntegerField(required=False)
    refine = serializers.BooleanField(required=False)
    d_min = serializers.FloatField(required=False)
    d_max = serializers.FloatField(required=False)
    loss = LossWeightsSerializer(required=False)

    def validate_step_size(self, value):
        if value <= 0:
            raise serializers.ValidationError("must be positive")
        return value

    def validate(self, data):
        max_depth = self.context.get("max_depth_m")
        d_max = data.get("d_max", max_depth)
        if d_max is None:
            raise serializers.ValidationError({"d_max": "depth bounds need d_max or the scene's max_depth_m"})
        d_min = data.get("d_min", settings.DEFOCUS["SOLVER"]["MIN_DEPTH_FRACTION"] * d_max)
        if not 0 < d_min < d_max:
            raise serializers.ValidationError(f"depth bounds must satisfy 0 < d_min < d_max, got ({d_min:g}, {d_max:g})")
        data["d_min"], data["d_max"] = d_min, d_max
        return data

    def create(self, validated_data):
        configured = settings.DEFOCUS["SOLVER"]
        weights = LossWeightsSerializer(
            data={**self.context.get("loss_overrides", {}), **validated_data.get("loss", {})}
        )
        weights.is_valid(raise_exception=True)
        try:
            return SolverConfig(
                depth_bounds=(validated_data["d_min"], validated_data["d_max"]),
                iterations=validated_data.get("iterations", configured["ITERATIONS"]),
                step_size=validated_data.get("step_size", configured["STEP_SIZE"]),
                optimizer=validated_data.get("optimizer", configured["OPTIMIZER"]),
                init=validated_data.get("init", configured["INIT"]),
                grid_levels=validated_data.get("grid_levels", configured["GRID_LEVELS"]),
                weights=weights.save(),
                seed=validated_data.get("seed", configured["SEED"]),
                refine=validated_data.get("refine", configured["REFINE"]),
            )
        except InvalidConfigError as exc:
            raise serializers.ValidationError(exc.message) from exc
