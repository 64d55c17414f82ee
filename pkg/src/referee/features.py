"""Per-azimuth feature extraction for polar radar scans.

Each row (one azimuth) is split into a low-frequency part, a moving average
along range, and the high-frequency residual. A bin is a feature when its
residual clears ``z_score`` times a noise scale estimated from the negative
residuals of the same row, and its raw intensity clears ``min_intensity``.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError
from .scan_io import RadarScan

# Absolute floor on the per-row noise scale. Intensities live in [0, 1] with
# 8-bit quantisation (1/255), so anything this small is rounding in the
# moving average and must not be treated as signal.
SIGMA_FLOOR = 1e-9


@dataclass(frozen=True)
class FeatureConfig:
    smooth_window: int = 17
    z_score: float = 3.0
    min_intensity: float = 0.08

    def __post_init__(self):
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ConfigError(f"smooth_window must be an odd positive integer, got {self.smooth_window}")
        if not self.z_score > 0:
            raise ConfigError(f"z_score must be positive, got {self.z_score}")
        if not 0.0 <= self.min_intensity <= 1.0:
            raise ConfigError(f"min_intensity must lie in [0, 1], got {self.min_intensity}")


@dataclass(frozen=True, eq=False)
class FeatureImage:
    """Boolean feature mask; ``True`` marks a feature, ``False`` free space."""

    mask: np.ndarray
    scan_id: int = 0

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.ndim != 2:
            raise ValueError(f"feature mask must be 2-D, got shape {mask.shape}")
        object.__setattr__(self, "mask", np.ascontiguousarray(mask, dtype=bool))

    @property
    def shape(self):
        return self.mask.shape

    @property
    def feature_count(self) -> int:
        return int(self.mask.sum())

    def shift_rows(self, shift: int) -> "FeatureImage":
        return FeatureImage(np.roll(self.mask, shift, axis=0), self.scan_id)


def extract_features(scan: RadarScan, cfg: FeatureConfig = FeatureConfig()) -> FeatureImage:
    if cfg.smooth_window > scan.range_bins:
        raise ConfigError(
            f"smooth_window {cfg.smooth_window} exceeds range bins {scan.range_bins}")
    mask = kernels.feature_mask(
        np.ascontiguousarray(scan.intensities, dtype=np.float64),
        int(cfg.smooth_window), float(cfg.z_score), float(cfg.min_intensity), SIGMA_FLOOR)
    return FeatureImage(mask, scan.scan_id)


def count_free_space(fi: FeatureImage) -> int:
    return fi.mask.size - fi.feature_count
