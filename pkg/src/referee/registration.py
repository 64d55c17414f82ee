"""Loop registration: heading from angle descriptors, then point-to-point ICP.

Transforms follow the "pose of b in frame a" convention: ``T_ab`` maps
coordinates expressed in frame ``b`` into frame ``a``. The heading transform
``T_(q, q_hat)`` rotates the query frame onto the candidate's orientation,
ICP estimates ``T_(q_hat, c)`` by aligning the candidate cloud onto the
pre-rotated query cloud, and their product ``T_(q, c)`` is the candidate pose
seen from the query.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import ConfigError
from .features import FeatureImage
from .se2 import Pose2, rot2


@dataclass(frozen=True)
class HeadingEstimate:
    n_hat: int
    n_blocks: int
    cosine_distance_at_min: float
    degenerate: bool = False

    @property
    def angle_deg(self) -> float:
        return self.n_hat * 360.0 / self.n_blocks

    @property
    def block_deg(self) -> float:
        return 360.0 / self.n_blocks


@dataclass(frozen=True, eq=False)
class RigidTransform2:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(2, 2)
        t = np.asarray(self.translation, dtype=float).reshape(2)
        if not np.allclose(R.T @ R, np.eye(2), atol=1e-9) or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError(f"not a proper rotation matrix:\n{R}")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform2":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def from_angle(cls, theta: float, translation=(0.0, 0.0)) -> "RigidTransform2":
        return cls(rot2(theta), translation)

    @classmethod
    def from_pose(cls, p: Pose2) -> "RigidTransform2":
        return cls(rot2(p.yaw), (p.x, p.y))

    @property
    def angle(self) -> float:
        return math.atan2(self.rotation[1, 0], self.rotation[0, 0])

    def to_pose(self) -> Pose2:
        return Pose2(self.translation[0], self.translation[1], self.angle)

    def apply(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return points @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform2") -> "RigidTransform2":
        """``self @ other``: apply ``other`` first."""
        return RigidTransform2(self.rotation @ other.rotation,
                               self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidTransform2":
        Rt = self.rotation.T
        return RigidTransform2(Rt, -Rt @ self.translation)


@dataclass(frozen=True)
class IcpConfig:
    max_iterations: int = 50
    max_corr_dist: float = 2.0
    tolerance: float = 1e-6
    fitness_threshold: float = 1.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError("icp.max_iterations must be >= 1")
        if not self.max_corr_dist > 0:
            raise ConfigError("icp.max_corr_dist must be positive")
        if not self.tolerance > 0:
            raise ConfigError("icp.tolerance must be positive")
        if not self.fitness_threshold > 0:
            raise ConfigError("icp.fitness_threshold must be positive")


@dataclass(eq=False)
class IcpResult:
    transform: RigidTransform2
    fitness: float
    iterations: int
    converged: bool
    n_correspondences: int = 0
    # (fitness before, fitness after) the alignment step of each iteration,
    # both measured on that iteration's correspondences
    history: List[tuple] = field(default_factory=list)


def rotate_descriptor(a, n: int) -> np.ndarray:
    """Angle descriptor as seen by a sensor turned counter-clockwise by ``n`` blocks."""
    return np.roll(np.asarray(a), -int(n))


def estimate_heading(a_q, a_c) -> HeadingEstimate:
    """Exhaustive cyclic-shift search under cosine distance.

    ``n_hat`` is the number of blocks the candidate sensor is turned
    counter-clockwise relative to the query, so
    ``estimate_heading(a, rotate_descriptor(a, s)).n_hat == s``.
    """
    a_q = np.asarray(a_q, dtype=np.float64)
    a_c = np.asarray(a_c, dtype=np.float64)
    if a_q.shape != a_c.shape or a_q.ndim != 1:
        raise ValueError(f"angle descriptor length mismatch: {a_q.shape} vs {a_c.shape}")
    n = a_q.shape[0]
    if not a_q.any() or not a_c.any():
        return HeadingEstimate(0, n, 1.0, degenerate=True)
    d = kernels.shift_cosine_distances(np.ascontiguousarray(a_q), np.ascontiguousarray(a_c))
    n_hat = int(np.argmin(d))
    return HeadingEstimate(n_hat, n, float(max(d[n_hat], 0.0)))


def heading_to_transform(h: HeadingEstimate, n_h: Optional[int] = None) -> RigidTransform2:
    n_h = h.n_blocks if n_h is None else n_h
    return RigidTransform2.from_angle(math.radians(h.n_hat * 360.0 / n_h))


def polar_to_cloud(fi: FeatureImage, range_resolution: float) -> np.ndarray:
    """One Cartesian point per feature pixel, in the sensor frame."""
    H = fi.shape[0]
    rows, cols = np.nonzero(fi.mask)
    theta = (rows + 0.5) * (2.0 * math.pi / H)
    r = (cols + 0.5) * range_resolution
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def apply_initial_alignment(cloud_q, t: RigidTransform2) -> np.ndarray:
    return t.inverse().apply(cloud_q)


def _procrustes(src, dst):
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    H = (src - mu_s).T @ (dst - mu_d)
    theta = math.atan2(H[0, 1] - H[1, 0], H[0, 0] + H[1, 1])
    R = rot2(theta)
    return R, mu_d - R @ mu_s, theta


def icp(source, target, cfg: IcpConfig = IcpConfig(),
        init: Optional[RigidTransform2] = None) -> IcpResult:
    """Point-to-point ICP; the result maps ``source`` onto ``target``."""
    source = np.asarray(source, dtype=float).reshape(-1, 2)
    target = np.asarray(target, dtype=float).reshape(-1, 2)
    if len(source) < 3 or len(target) < 3:
        raise ValueError("icp needs at least 3 points in each cloud")
    tree = cKDTree(target)
    R = np.eye(2) if init is None else init.rotation.copy()
    t = np.zeros(2) if init is None else init.translation.copy()
    history = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        moved = source @ R.T + t
        dist, j = tree.query(moved, distance_upper_bound=cfg.max_corr_dist)
        keep = np.isfinite(dist)
        if keep.sum() < 3:
            break
        src, dst = moved[keep], target[j[keep]]
        before = float(np.mean(dist[keep] ** 2))
        dR, dt, dtheta = _procrustes(src, dst)
        after = float(np.mean(np.sum((src @ dR.T + dt - dst) ** 2, axis=1)))
        history.append((before, after))
        R = dR @ R
        t = dR @ t + dt
        if abs(dtheta) + float(np.hypot(*dt)) < cfg.tolerance:
            converged = True
            break

    # re-orthonormalise accumulated rotation
    theta = math.atan2(R[1, 0], R[0, 0])
    transform = RigidTransform2(rot2(theta), t)
    dist, _ = tree.query(transform.apply(source), distance_upper_bound=cfg.max_corr_dist)
    keep = np.isfinite(dist)
    n_corr = int(keep.sum())
    if n_corr < 3:
        return IcpResult(transform, math.inf, it, False, n_corr, history)
    return IcpResult(transform, float(np.mean(dist[keep] ** 2)), it, converged, n_corr, history)


def compose_and_verify(t_heading: RigidTransform2, icp_res: IcpResult,
                       fitness_threshold: float) -> Optional[RigidTransform2]:
    """``t_heading @ icp_res.transform`` if ICP converged with fitness below the threshold."""
    if not icp_res.converged or not icp_res.fitness < fitness_threshold:
        return None
    return t_heading.compose(icp_res.transform)


@dataclass(eq=False)
class LoopRegistration:
    heading: HeadingEstimate
    icp: Optional[IcpResult]
    transform: Optional[RigidTransform2]

    @property
    def accepted(self) -> bool:
        return self.transform is not None


def register_loop(fi_q: FeatureImage, fi_c: FeatureImage, a_q, a_c,
                  range_resolution: float, cfg: IcpConfig = IcpConfig()) -> LoopRegistration:
    """Heading search, initial alignment, ICP and verification for one loop pair.

    On acceptance ``transform`` is the candidate pose in the query frame.
    """
    heading = estimate_heading(a_q, a_c)
    t_h = heading_to_transform(heading)
    cloud_q = apply_initial_alignment(polar_to_cloud(fi_q, range_resolution), t_h)
    cloud_c = polar_to_cloud(fi_c, range_resolution)
    if heading.degenerate or len(cloud_q) < 3 or len(cloud_c) < 3:
        return LoopRegistration(heading, None, None)
    res = icp(cloud_c, cloud_q, cfg)
    return LoopRegistration(heading, res, compose_and_verify(t_h, res, cfg.fitness_threshold))
