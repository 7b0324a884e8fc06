"""Rao-Blackwellized particle-filter SLAM.

Each particle carries a pose hypothesis and its own occupancy grid. Per
step: sample the odometry motion model, refine the sampled pose by scan
matching against the particle's map, reweight by the match score, and
integrate the scan at the refined pose. Resampling (low-variance) triggers
when the effective sample size drops below N/2; duplicated particles deep-
copy their maps.

Per-particle randomness is drawn from streams keyed by
(seed, step, particle_index), so particles may be evaluated in any order --
or in parallel -- with bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import rng as rng_mod
from ..geometry import Pose2D
from ..grid import OccupancyGrid
from ..worldsim.lidar import Scan
from ..worldsim.motion import OdomNoise, sample_motion
from .likelihood import LikelihoodField
from .mapping import MappingParams, RayTemplate, integrate_scan
from .scanmatch import ScanMatchParams, scan_match


@dataclass(frozen=True)
class SlamParams:
    n_particles: int = 30
    motion_noise: OdomNoise = OdomNoise(0.05, 0.01, 0.02, 0.005)
    mapping: MappingParams = MappingParams()
    matching: ScanMatchParams = ScanMatchParams()
    min_match_score: float = 0.05  # weight floor so one bad match cannot zero a particle


@dataclass
class Particle:
    pose: Pose2D
    weight: float
    grid: OccupancyGrid


@dataclass
class SlamState:
    particles: list[Particle]
    seed: int
    params: SlamParams
    step_count: int = 0
    best_index: int = 0
    last_resample_ess: float = field(default=float("nan"))
    resample_count: int = 0

    @property
    def best(self) -> Particle:
        return self.particles[self.best_index]

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.particles])


def slam_init(start_pose: Pose2D, map_template: OccupancyGrid, seed: int,
              params: SlamParams = SlamParams()) -> SlamState:
    """All particles at the known start pose with empty copies of the template grid."""
    particles = [
        Particle(start_pose, 1.0 / params.n_particles,
                 OccupancyGrid.empty(map_template.width, map_template.height,
                                     map_template.resolution, map_template.origin))
        for _ in range(params.n_particles)
    ]
    return SlamState(particles, seed, params)


def _normalize(particles: list[Particle]) -> None:
    total = sum(p.weight for p in particles)
    if total <= 0:
        for p in particles:
            p.weight = 1.0 / len(particles)
    else:
        for p in particles:
            p.weight /= total


def effective_sample_size(weights: np.ndarray) -> float:
    return float(1.0 / np.sum(weights ** 2))


def low_variance_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling; returns the chosen ancestor index per slot."""
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions)


def slam_step(state: SlamState, odom_delta: Pose2D, scan: Scan) -> SlamState:
    """Advance the filter by one (odometry, scan) pair. Mutates and returns state."""
    params = state.params
    any_hits = bool(np.any(scan.hits))
    template = RayTemplate(scan, params.mapping,
                           state.particles[0].grid.resolution)

    for i, p in enumerate(state.particles):
        prng = rng_mod.stream(state.seed, "slam", state.step_count, i)
        sampled = sample_motion(p.pose, odom_delta, params.motion_noise, prng)
        if not p.grid.contains_point(sampled.x, sampled.y):
            # motion noise walked the hypothesis off the map: hold position
            # and penalize instead of corrupting the grid update
            p.weight *= params.min_match_score
            continue
        fld = LikelihoodField(p.grid, params.matching.sigma_hit)
        if any_hits and fld.n_occupied > 0:
            result = scan_match(p.grid, scan, sampled, params.matching, field=fld)
            if result.low_confidence or not p.grid.contains_point(
                    result.pose.x, result.pose.y):
                p.pose = sampled  # keep motion prediction, skip reweighting
            else:
                p.pose = result.pose
                p.weight *= max(result.score, params.min_match_score)
        else:
            p.pose = sampled
        integrate_scan(p.grid, p.pose, scan, params.mapping, template=template)

    _normalize(state.particles)
    weights = state.weights
    ess = effective_sample_size(weights)
    state.last_resample_ess = ess
    n = params.n_particles
    if ess < n / 2.0:
        ancestors = low_variance_resample(
            weights, rng_mod.stream(state.seed, "resample", state.step_count))
        old = state.particles
        used: set[int] = set()
        new_particles = []
        for a in ancestors:
            a = int(a)
            if a in used:
                new_particles.append(Particle(old[a].pose, 1.0 / n, old[a].grid.copy()))
            else:
                used.add(a)
                new_particles.append(Particle(old[a].pose, 1.0 / n, old[a].grid))
        state.particles = new_particles
        state.resample_count += 1

    state.best_index = int(np.argmax(state.weights))
    state.step_count += 1
    return state
