"""Unicycle kinematics with the four-coefficient odometry noise model.

True motion integrates the commanded twist exactly (closed-form circular
arc). Odometry is the true body-frame displacement decomposed into
(rot1, trans, rot2) and corrupted with zero-mean Gaussian noise whose
variances follow the standard alpha coefficients: rotation noise grows with
rotation (a1) and translation (a2); translation noise grows with translation
(a3) and rotation (a4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import Pose2D, Twist, wrap_angle


@dataclass(frozen=True)
class OdomNoise:
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    a4: float = 0.0

    @property
    def silent(self) -> bool:
        return self.a1 == 0 and self.a2 == 0 and self.a3 == 0 and self.a4 == 0


def integrate_twist(pose: Pose2D, cmd: Twist, dt: float) -> Pose2D:
    """Exact unicycle integration over dt."""
    if abs(cmd.w) < 1e-12:
        dx, dy, dth = cmd.v * dt, 0.0, cmd.w * dt
    else:
        dth = cmd.w * dt
        radius = cmd.v / cmd.w
        dx = radius * math.sin(dth)
        dy = radius * (1.0 - math.cos(dth))
    return pose.compose(Pose2D(dx, dy, dth))


def decompose_motion(delta: Pose2D) -> tuple[float, float, float]:
    """Split a body-frame displacement into (rot1, trans, rot2)."""
    trans = math.hypot(delta.x, delta.y)
    if trans < 1e-9:
        return 0.0, trans, wrap_angle(delta.theta)
    rot1 = wrap_angle(math.atan2(delta.y, delta.x))
    rot2 = wrap_angle(delta.theta - rot1)
    return rot1, trans, rot2


def compose_motion(rot1: float, trans: float, rot2: float) -> Pose2D:
    return Pose2D(trans * math.cos(rot1), trans * math.sin(rot1),
                  wrap_angle(rot1 + rot2))


def _noisy_terms(rot1: float, trans: float, rot2: float, noise: OdomNoise,
                 rng: np.random.Generator) -> tuple[float, float, float]:
    s1 = math.sqrt(noise.a1 * rot1 ** 2 + noise.a2 * trans ** 2)
    st = math.sqrt(noise.a3 * trans ** 2 + noise.a4 * (rot1 ** 2 + rot2 ** 2))
    s2 = math.sqrt(noise.a1 * rot2 ** 2 + noise.a2 * trans ** 2)
    draws = rng.normal(0.0, 1.0, 3)
    return rot1 + draws[0] * s1, trans + draws[1] * st, rot2 + draws[2] * s2


def step(pose: Pose2D, cmd: Twist, dt: float, noise: OdomNoise,
         rng: np.random.Generator) -> tuple[Pose2D, Pose2D]:
    """Advance the true pose and report a noisy body-frame odometry delta.

    Returns (true_pose, odom_delta); with all alphas zero the odometry delta
    equals the true displacement exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    true_pose = integrate_twist(pose, cmd, dt)
    delta = true_pose.relative_to(pose)
    if noise.silent:
        return true_pose, delta
    rot1, trans, rot2 = decompose_motion(delta)
    return true_pose, compose_motion(*_noisy_terms(rot1, trans, rot2, noise, rng))


def sample_motion(pose: Pose2D, odom_delta: Pose2D, noise: OdomNoise,
                  rng: np.random.Generator) -> Pose2D:
    """Propagate a pose hypothesis through a measured odometry delta."""
    if noise.silent:
        return pose.compose(odom_delta)
    rot1, trans, rot2 = decompose_motion(odom_delta)
    return pose.compose(compose_motion(*_noisy_terms(rot1, trans, rot2, noise, rng)))
