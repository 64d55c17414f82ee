"""Free-space place descriptors.

``r_referee`` sums free-space pixels over every azimuth inside range blocks of
``beta`` bins, so it does not change when the sensor rotates. ``a_referee``
sums, inside blocks of ``alpha`` azimuth rows, the free pixels that lie no
farther than each row's farthest feature; it rotates with the sensor and is
used to recover heading.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import ConfigError
from .features import FeatureImage

DEFAULT_N_W = 42


@dataclass(frozen=True)
class DescriptorConfig:
    """``beta=None`` picks ``W // 42`` so the range descriptor has 42 entries."""

    beta: Optional[int] = None
    alpha: int = 1

    def __post_init__(self):
        if self.beta is not None and self.beta < 1:
            raise ConfigError(f"beta must be a positive integer, got {self.beta}")
        if self.alpha < 1:
            raise ConfigError(f"alpha must be a positive integer, got {self.alpha}")

    def resolve(self, shape):
        """Return ``(beta, alpha, n_w, n_h)`` for an ``H x W`` image."""
        H, W = shape
        beta = self.beta
        if beta is None:
            if W % DEFAULT_N_W:
                raise ConfigError(
                    f"range bins {W} not divisible by {DEFAULT_N_W}; set descriptor.beta explicitly")
            beta = W // DEFAULT_N_W
        if W % beta:
            raise ConfigError(f"beta={beta} does not divide range bins W={W}")
        if H % self.alpha:
            raise ConfigError(f"alpha={self.alpha} does not divide azimuth count H={H}")
        return beta, self.alpha, W // beta, H // self.alpha


@dataclass(frozen=True)
class ConfusionCounts:
    fp_feature: int
    fn_feature: int
    fp_free: int
    fn_free: int

    @property
    def false_total(self) -> int:
        return self.fp_feature + self.fn_feature


def r_referee(fi: FeatureImage, cfg: DescriptorConfig = DescriptorConfig()) -> np.ndarray:
    beta, _, _, _ = cfg.resolve(fi.shape)
    return kernels.r_referee(fi.mask, beta).astype(np.float32)


def a_referee(fi: FeatureImage, cfg: DescriptorConfig = DescriptorConfig()) -> np.ndarray:
    _, alpha, _, _ = cfg.resolve(fi.shape)
    return kernels.a_referee(fi.mask, alpha).astype(np.float32)


def confusion_duality(gt_mask: FeatureImage, pred_mask: FeatureImage) -> ConfusionCounts:
    """Count false detections from the feature and the free-space perspective.

    A ground-truth feature predicted as free space is a false negative for
    features and a false positive for free space; the reverse case swaps the
    roles. Both perspectives therefore see the same number of errors.
    """
    if gt_mask.shape != pred_mask.shape:
        raise ValueError(f"shape mismatch: {gt_mask.shape} vs {pred_mask.shape}")
    gt, pred = gt_mask.mask, pred_mask.mask
    missed = int(np.count_nonzero(gt & ~pred))
    spurious = int(np.count_nonzero(~gt & pred))
    counts = ConfusionCounts(fp_feature=spurious, fn_feature=missed,
                             fp_free=missed, fn_free=spurious)
    assert counts.fp_feature + counts.fn_feature == counts.fn_free + counts.fp_free
    return counts
