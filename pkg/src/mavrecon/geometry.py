"""Planar pose and velocity primitives shared by the simulator, SLAM, and planners."""

from __future__ import annotations

import math
from dataclasses import dataclass


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def compose(self, delta: "Pose2D") -> "Pose2D":
        """Apply a body-frame delta to this pose (pose ⊕ delta)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * delta.x - s * delta.y,
            self.y + s * delta.x + c * delta.y,
            self.theta + delta.theta,
        )

    def relative_to(self, origin: "Pose2D") -> "Pose2D":
        """Express this pose in the body frame of `origin` (origin⁻¹ ⊕ pose)."""
        c, s = math.cos(origin.theta), math.sin(origin.theta)
        dx, dy = self.x - origin.x, self.y - origin.y
        return Pose2D(c * dx + s * dy, -s * dx + c * dy, self.theta - origin.theta)

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


@dataclass(frozen=True)
class Twist:
    """Forward velocity (m/s) and yaw rate (rad/s) of a unicycle."""

    v: float = 0.0
    w: float = 0.0


IDENTITY = Pose2D(0.0, 0.0, 0.0)
STOP = Twist(0.0, 0.0)
