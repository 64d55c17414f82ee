"""Planar rigid-body helpers shared by registration, the pose graph and synth."""
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Map an angle in radians to (-pi, pi]."""
    a = math.remainder(float(a), TWO_PI)
    return math.pi if a == -math.pi else a


def wrap_angles(a):
    """Vectorised :func:`wrap_angle`."""
    a = np.asarray(a, dtype=float)
    w = np.remainder(a + math.pi, TWO_PI) - math.pi
    return np.where(w <= -math.pi, w + TWO_PI, w)


def rot2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Pose2:
    """A planar pose. ``yaw`` is normalised to (-pi, pi] on construction."""

    x: float
    y: float
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"pose has non-finite translation: {self}")

    def compose(self, other: "Pose2") -> "Pose2":
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return Pose2(self.x + c * other.x - s * other.y,
                     self.y + s * other.x + c * other.y,
                     self.yaw + other.yaw)

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return Pose2(-c * self.x - s * self.y, s * self.x - c * self.y, -self.yaw)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.yaw])

    def matrix(self) -> np.ndarray:
        m = np.eye(3)
        m[:2, :2] = rot2(self.yaw)
        m[:2, 2] = self.x, self.y
        return m

    @classmethod
    def from_array(cls, v) -> "Pose2":
        return cls(v[0], v[1], v[2])


def relative_pose(a: Pose2, b: Pose2) -> Pose2:
    """Pose of ``b`` expressed in the frame of ``a``."""
    c, s = math.cos(a.yaw), math.sin(a.yaw)
    dx, dy = b.x - a.x, b.y - a.y
    return Pose2(c * dx + s * dy, -s * dx + c * dy, b.yaw - a.yaw)
