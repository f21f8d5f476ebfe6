from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class DepthMetrics:
    """Standard monocular-depth error and accuracy metrics."""

    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    log10: float
    delta1: float
    delta2: float
    delta3: float

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ImageMetrics:
    """PSNR in dB (inf for identical images) and mean SSIM."""

    psnr: float
    ssim: float

    def as_dict(self):
        return asdict(self)
