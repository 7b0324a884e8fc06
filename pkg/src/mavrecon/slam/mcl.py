"""Monte-Carlo localization on a fixed map.

Particles are poses only. Each step samples the odometry motion model,
weights particles with the likelihood-field beam model (mixture of a
Gaussian hit term and a uniform floor), resamples on ESS < N/2, and
reports the weighted, circular-aware mean pose. If the scan is
inconsistent with the map everywhere (all particles below the kidnap
score), the filter reinitializes uniformly over free cells and flags the
event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose2D
from ..grid import OccupancyGrid
from ..worldsim.lidar import Scan
from ..worldsim.motion import OdomNoise, sample_motion
from .likelihood import LikelihoodField
from .rbpf import effective_sample_size, low_variance_resample
from .scanmatch import _decimate


@dataclass(frozen=True)
class MclParams:
    n_particles: int = 500
    motion_noise: OdomNoise = OdomNoise(0.05, 0.01, 0.02, 0.005)
    sigma_hit: float = 0.2
    z_hit: float = 0.95
    z_rand: float = 0.05
    max_beams: int = 60
    kidnap_score: float = 0.03  # mean endpoint likelihood below this for every particle

    def __post_init__(self) -> None:
        if abs(self.z_hit + self.z_rand - 1.0) > 1e-9:
            raise ValueError("z_hit + z_rand must sum to 1")


@dataclass
class MclState:
    poses: np.ndarray  # (n, 3)
    weights: np.ndarray
    params: MclParams
    kidnapped_events: int = 0
    last_ess: float = field(default=float("nan"))


def mcl_init(start: Pose2D, sigma_xy: float, sigma_theta: float,
             params: MclParams, rng: np.random.Generator) -> MclState:
    n = params.n_particles
    poses = np.column_stack((
        rng.normal(start.x, sigma_xy, n),
        rng.normal(start.y, sigma_xy, n),
        rng.normal(start.theta, sigma_theta, n),
    ))
    return MclState(poses, np.full(n, 1.0 / n), params)


def _uniform_over_free(grid: OccupancyGrid, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    rows, cols = np.nonzero(grid.free_mask())
    if rows.size == 0:
        raise ValueError("map has no free cells")
    pick = rng.integers(0, rows.size, n)
    x, y = grid.cell_to_world(rows[pick], cols[pick])
    jitter = (rng.random((n, 2)) - 0.5) * grid.resolution
    theta = rng.uniform(-math.pi, math.pi, n)
    return np.column_stack((x + jitter[:, 0], y + jitter[:, 1], theta))


def mcl_init_global(grid: OccupancyGrid, params: MclParams,
                    rng: np.random.Generator) -> MclState:
    poses = _uniform_over_free(grid, params.n_particles, rng)
    return MclState(poses, np.full(params.n_particles, 1.0 / params.n_particles),
                    params)


def _mean_pose(poses: np.ndarray, weights: np.ndarray) -> Pose2D:
    x = float(np.dot(weights, poses[:, 0]))
    y = float(np.dot(weights, poses[:, 1]))
    theta = math.atan2(float(np.dot(weights, np.sin(poses[:, 2]))),
                       float(np.dot(weights, np.cos(poses[:, 2]))))
    return Pose2D(x, y, theta)


def mcl_step(state: MclState, grid: OccupancyGrid, odom_delta: Pose2D,
             scan: Scan, rng: np.random.Generator,
             field_cache: LikelihoodField | None = None
             ) -> tuple[MclState, Pose2D, list[str]]:
    """One predict/weight/resample cycle. Returns (state, estimate, events)."""
    params = state.params
    events: list[str] = []
    fld = field_cache if field_cache is not None else LikelihoodField(
        grid, params.sigma_hit)

    n = len(state.weights)
    for i in range(n):
        p = sample_motion(Pose2D(*state.poses[i]), odom_delta,
                          params.motion_noise, rng)
        state.poses[i] = (p.x, p.y, p.theta)

    hits = scan.hits
    angles, ranges = _decimate(scan.angles[hits], scan.ranges[hits],
                               params.max_beams)
    if angles.size:
        a = state.poses[:, 2:3] + angles[None, :]
        ex = state.poses[:, 0:1] + ranges[None, :] * np.cos(a)
        ey = state.poses[:, 1:2] + ranges[None, :] * np.sin(a)
        pts = np.column_stack((ex.ravel(), ey.ravel()))
        lik = fld.likelihoods(pts).reshape(n, -1)
        mean_lik = lik.mean(axis=1)
        if np.all(mean_lik < params.kidnap_score):
            events.append("kidnapped")
            state.kidnapped_events += 1
            state.poses = _uniform_over_free(grid, n, rng)
            state.weights = np.full(n, 1.0 / n)
            return state, _mean_pose(state.poses, state.weights), events
        beam_p = params.z_hit * lik + params.z_rand
        log_w = np.log(beam_p).sum(axis=1)
        log_w -= log_w.max()
        state.weights = state.weights * np.exp(log_w)

    total = state.weights.sum()
    if total <= 0:
        events.append("kidnapped")
        state.kidnapped_events += 1
        state.poses = _uniform_over_free(grid, n, rng)
        state.weights = np.full(n, 1.0 / n)
        return state, _mean_pose(state.poses, state.weights), events
    state.weights = state.weights / total

    estimate = _mean_pose(state.poses, state.weights)

    ess = effective_sample_size(state.weights)
    state.last_ess = ess
    if ess < n / 2.0:
        ancestors = low_variance_resample(state.weights, rng)
        state.poses = state.poses[ancestors].copy()
        state.weights = np.full(n, 1.0 / n)

    return state, estimate, events
