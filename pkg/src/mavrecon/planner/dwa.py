"""Dynamic window approach: sample reachable velocities, score short rollouts.

The window is [v +- a_v*dt, w +- a_w*dt] clipped to the absolute limits and
laid out on an n_v x n_w lattice (reverse motion is not sampled; the
vehicle yaws in place instead). Rollouts integrate the unicycle in closed
form over the horizon; any rollout touching a lethal cell is inadmissible.
Admissible rollouts are scored on heading to the carrot point, minimum
clearance, and forward speed, each min-max normalized across the admissible
set. No admissible rollout means maximum deceleration toward a stop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import Pose2D, Twist, wrap_angle
from .costmap import Costmap


@dataclass(frozen=True)
class DwaParams:
    v_max: float = 0.7
    w_max: float = 1.5
    a_v: float = 1.2
    a_w: float = 3.0
    dt_sim: float = 0.1
    # the rollout horizon doubles as the collision lookahead; keep it near
    # braking scale or driving toward a frontier (unknown = lethal) stalls
    horizon: float = 0.8
    w_heading: float = 0.7
    w_clearance: float = 0.15
    w_velocity: float = 0.15
    n_v: int = 6
    n_w: int = 13
    lookahead: float = 0.75
    goal_tolerance: float = 0.2
    clearance_cap: float = 1.0

    def __post_init__(self) -> None:
        if min(self.v_max, self.w_max, self.a_v, self.a_w, self.dt_sim,
               self.horizon) <= 0:
            raise ValueError("kinematic limits and horizon must be positive")
        if self.horizon < self.dt_sim:
            raise ValueError("horizon must cover at least one dt_sim")


def carrot_point(path: np.ndarray, pose: Pose2D, lookahead: float) -> np.ndarray:
    """Point `lookahead` ahead of the pose's projection onto the path.

    Projecting first makes the carrot insensitive to where the plan started:
    points already passed can never be selected. Falls back to the final
    point when less than `lookahead` of path remains.
    """
    p = np.array([pose.x, pose.y])
    if len(path) == 1:
        return path[0]
    seg = np.diff(path, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    best_d2 = np.inf
    s_proj = 0.0
    for i in range(len(seg)):
        if seg_len[i] < 1e-12:
            continue
        t = float(np.clip(np.dot(p - path[i], seg[i]) / seg_len[i] ** 2, 0.0, 1.0))
        q = path[i] + t * seg[i]
        d2 = float(np.dot(p - q, p - q))
        if d2 < best_d2:
            best_d2 = d2
            s_proj = cum[i] + t * seg_len[i]
    target_s = s_proj + lookahead
    if target_s >= cum[-1]:
        return path[-1]
    j = int(np.searchsorted(cum, target_s, side="right") - 1)
    j = min(max(j, 0), len(seg) - 1)
    frac = (target_s - cum[j]) / max(seg_len[j], 1e-12)
    return path[j] + frac * seg[j]


def rollout(pose: Pose2D, v: float, w: float, params: DwaParams) -> np.ndarray:
    """Closed-form unicycle rollout, poses at t = dt_sim .. horizon, shape (k, 3)."""
    t = np.arange(params.dt_sim, params.horizon + 1e-9, params.dt_sim)
    theta = pose.theta + w * t
    if abs(w) < 1e-12:
        x = pose.x + v * t * math.cos(pose.theta)
        y = pose.y + v * t * math.sin(pose.theta)
    else:
        x = pose.x + (v / w) * (np.sin(theta) - math.sin(pose.theta))
        y = pose.y - (v / w) * (np.cos(theta) - math.cos(pose.theta))
    return np.column_stack((x, y, theta))


def window(vel: Twist, params: DwaParams, dt_cmd: float) -> tuple[np.ndarray, np.ndarray]:
    v_lo = max(0.0, vel.v - params.a_v * dt_cmd)
    v_hi = min(params.v_max, vel.v + params.a_v * dt_cmd)
    w_lo = max(-params.w_max, vel.w - params.a_w * dt_cmd)
    w_hi = min(params.w_max, vel.w + params.a_w * dt_cmd)
    return (np.linspace(v_lo, v_hi, params.n_v),
            np.linspace(w_lo, w_hi, params.n_w))


def _escape_twist(pose: Pose2D, vel: Twist, costmap: Costmap,
                  params: DwaParams, dt_cmd: float) -> Twist:
    """Recovery when the pose itself reads lethal (estimate jumped into the
    inflation band): pick the window sample that gains the most clearance."""
    vs, ws = window(vel, params, dt_cmd)
    best = Twist(0.0, 0.0)
    best_gain = -math.inf
    here = costmap.clearance_at(pose.x, pose.y)
    for v in vs:
        for w in ws:
            ro = rollout(pose, float(v), float(w), params)
            clear = costmap.clearance_at(ro[:, 0], ro[:, 1])
            gain = float(clear[-1] + 0.5 * clear.min()) - 1.5 * here \
                - 1e-6 * abs(w) - 1e-7 * v
            if gain > best_gain:
                best_gain = gain
                best = Twist(float(v), float(w))
    return best


def _stop_twist(vel: Twist, params: DwaParams, dt_cmd: float) -> Twist:
    v = max(0.0, vel.v - params.a_v * dt_cmd)
    if vel.w > 0:
        w = max(0.0, vel.w - params.a_w * dt_cmd)
    else:
        w = min(0.0, vel.w + params.a_w * dt_cmd)
    return Twist(v, w)


def dwa_step(pose: Pose2D, vel: Twist, path: np.ndarray, costmap: Costmap,
             params: DwaParams = DwaParams(), dt_cmd: float | None = None) -> Twist:
    if path is None or len(path) == 0:
        raise ValueError("dwa_step needs a non-empty path")
    dt_cmd = params.dt_sim if dt_cmd is None else dt_cmd

    goal = path[-1]
    if math.hypot(goal[0] - pose.x, goal[1] - pose.y) <= params.goal_tolerance:
        return Twist(0.0, 0.0)

    if costmap.is_lethal_at(pose.x, pose.y):
        return _escape_twist(pose, vel, costmap, params, dt_cmd)

    carrot = carrot_point(path, pose, params.lookahead)
    vs, ws = window(vel, params, dt_cmd)
    t = np.arange(params.dt_sim, params.horizon + 1e-9, params.dt_sim)
    n_t = t.size

    vg, wg = np.meshgrid(vs, ws, indexing="ij")
    v_flat = vg.ravel()
    w_flat = wg.ravel()
    n = v_flat.size

    theta = pose.theta + w_flat[:, None] * t[None, :]
    small = np.abs(w_flat) < 1e-12
    safe_w = np.where(small, 1.0, w_flat)
    x = np.where(
        small[:, None],
        pose.x + v_flat[:, None] * t[None, :] * math.cos(pose.theta),
        pose.x + (v_flat / safe_w)[:, None] * (np.sin(theta) - math.sin(pose.theta)),
    )
    y = np.where(
        small[:, None],
        pose.y + v_flat[:, None] * t[None, :] * math.sin(pose.theta),
        pose.y - (v_flat / safe_w)[:, None] * (np.cos(theta) - math.cos(pose.theta)),
    )

    lethal = costmap.is_lethal_at(x.ravel(), y.ravel()).reshape(n, n_t)
    admissible = ~lethal.any(axis=1)
    if not np.any(admissible):
        return _stop_twist(vel, params, dt_cmd)

    clearance = costmap.clearance_at(x.ravel(), y.ravel()).reshape(n, n_t)
    min_clear = np.minimum(clearance.min(axis=1), params.clearance_cap)

    heading_err = np.abs([
        wrap_angle(math.atan2(carrot[1] - yi, carrot[0] - xi) - thi)
        for xi, yi, thi in zip(x[:, -1], y[:, -1], theta[:, -1])
    ])
    heading_raw = 1.0 - heading_err / math.pi
    velocity_raw = v_flat / params.v_max

    def normalized(raw: np.ndarray) -> np.ndarray:
        vals = raw[admissible]
        span = vals.max() - vals.min()
        if span < 1e-12:
            return np.zeros_like(raw)
        return (raw - vals.min()) / span

    score = (params.w_heading * normalized(heading_raw)
             + params.w_clearance * normalized(min_clear)
             + params.w_velocity * normalized(velocity_raw))
    score = np.where(admissible, score, -np.inf)

    # argmax with ties broken by lower |w|, then lower v, then lattice order
    best = np.lexsort((np.arange(n), v_flat, np.abs(w_flat), -score))[0]
    return Twist(float(v_flat[best]), float(w_flat[best]))
