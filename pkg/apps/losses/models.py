import math
from dataclasses import asdict, dataclass

from core.utils.exception_handler import InvalidConfigError


@dataclass(frozen=True)
class LossWeights:
    """Balance of the training objective: SSIM/L1 mix alpha and the three lambdas."""

    alpha: float = 0.85
    lambda_rec: float = 1.0
    lambda_smooth: float = 1e-3
    lambda_sharp: float = 1e-1

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value) or value < 0:
                raise InvalidConfigError(f"{name} must be a non-negative finite number, got {value}")
        if self.alpha > 1:
            raise InvalidConfigError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class LossReport:
    total: float
    rec: float
    smooth: float
    sharp: float

    @classmethod
    def weighted(cls, weights, rec, smooth, sharp):
        total = weights.lambda_rec * rec + weights.lambda_smooth * smooth + weights.lambda_sharp * sharp
        return cls(total=float(total), rec=float(rec), smooth=float(smooth), sharp=float(sharp))

    @classmethod
    def mean(cls, reports):
        """Average of per-slice reports, summed in order."""
        count = len(reports)
        fields = {name: math.fsum(getattr(r, name) for r in reports) / count for name in ("total", "rec", "smooth", "sharp")}
        return cls(**fields)

    def is_finite(self):
        return all(math.isfinite(value) for value in asdict(self).values())

    def as_dict(self):
        return asdict(self)
