from dataclasses import dataclass, field

import numpy as np
from django.db import models
from django.utils.translation import gettext_lazy as _

from apps.losses.models import LossWeights
from core.utils.exception_handler import InvalidConfigError


class OptimizerChoices(models.TextChoices):
    DESCENT = "descent", _("Plain gradient descent")
    MOMENTUM = "momentum", _("Momentum 0.9")
    ADAM = "adam", _("Adaptive moments")


class InitChoices(models.TextChoices):
    CONSTANT = "constant", _("Constant mid-depth")
    GRID = "grid", _("Coarse grid search")


@dataclass(frozen=True)
class SolverConfig:
    """Settings of one depth solve."""

    depth_bounds: tuple
    iterations: int = 500
    step_size: float = 0.05
    optimizer: str = OptimizerChoices.ADAM
    init: str = InitChoices.GRID
    grid_levels: int = 20
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    refine: bool = True

    def __post_init__(self):
        d_min, d_max = self.depth_bounds
        if not 0 < d_min < d_max:
            raise InvalidConfigError(f"depth bounds must satisfy 0 < d_min < d_max, got {self.depth_bounds}")
        object.__setattr__(self, "depth_bounds", (float(d_min), float(d_max)))
        if self.iterations < 1:
            raise InvalidConfigError("iterations must be at least 1")
        if not self.step_size > 0:
            raise InvalidConfigError("step size must be positive")
        if self.optimizer not in OptimizerChoices.values:
            raise InvalidConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.init not in InitChoices.values:
            raise InvalidConfigError(f"unknown init {self.init!r}")
        if self.grid_levels < 2:
            raise InvalidConfigError("grid search needs at least two levels")

    @property
    def d_min(self):
        return self.depth_bounds[0]

    @property
    def d_max(self):
        return self.depth_bounds[1]


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Recovered depth, per-iteration loss reports and the texture confidence map."""

    depth: object
    loss_history: tuple
    converged: bool
    confidence: np.ndarray = None

    @property
    def iterations(self):
        return len(self.loss_history)

    @property
    def final_loss(self):
        return self.loss_history[-1]
