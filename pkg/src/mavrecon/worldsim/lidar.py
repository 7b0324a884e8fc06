"""Raycast LiDAR model.

Beams are traced through the ground-truth grid with an Amanatides-Woo style
DDA traversal, vectorized across beams. The reported range is the exact
distance to the boundary of the first occupied cell along the ray, then
corrupted by Gaussian range noise and per-beam dropout. Ranges above
max_range encode no-return.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import Pose2D
from .world import World

_HUGE = 1e30


@dataclass(frozen=True)
class LidarParams:
    fov: float = np.deg2rad(320.0)
    n_beams: int = 640
    max_range: float = 50.0
    range_noise_sigma: float = 0.0
    dropout_prob: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.fov <= 2.0 * np.pi + 1e-12):
            raise ValueError("fov must be in (0, 2*pi]")
        if self.n_beams < 2:
            raise ValueError("n_beams must be >= 2")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")
        if not (0.0 <= self.dropout_prob <= 1.0):
            raise ValueError("dropout_prob must be a probability")

    def beam_angles(self) -> np.ndarray:
        """Sensor-frame beam angles, symmetric about the forward axis."""
        return np.linspace(-self.fov / 2.0, self.fov / 2.0, self.n_beams)

    @property
    def no_return(self) -> float:
        return self.max_range + 1.0


@dataclass
class Scan:
    angles: np.ndarray
    ranges: np.ndarray
    max_range: float

    def __post_init__(self) -> None:
        self.angles = np.asarray(self.angles, dtype=np.float64)
        self.ranges = np.asarray(self.ranges, dtype=np.float64)
        if self.angles.shape != self.ranges.shape:
            raise ValueError("angles and ranges must have equal length")
        valid = self.hits
        if np.any(self.ranges[valid] < 0):
            raise ValueError("ranges must be non-negative")

    @property
    def hits(self) -> np.ndarray:
        """Mask of beams that returned (range <= max_range)."""
        return self.ranges <= self.max_range

    def endpoints(self, pose: Pose2D) -> np.ndarray:
        """World-frame endpoints of returning beams, shape (k, 2)."""
        m = self.hits
        a = self.angles[m] + pose.theta
        r = self.ranges[m]
        return np.column_stack((pose.x + r * np.cos(a), pose.y + r * np.sin(a)))


def raycast(world: World, pose: Pose2D, lidar: LidarParams,
            rng: np.random.Generator) -> Scan:
    """Simulate one scan from `pose`. Deterministic for a given rng state."""
    grid = world.gt_grid
    res = grid.resolution
    row0, col0 = grid.world_to_cell(pose.x, pose.y)
    if not grid.in_bounds(row0, col0):
        raise ValueError("pose lies outside the world grid")
    if world.occupied[int(row0), int(col0)]:
        raise ValueError("pose lies inside an occupied cell")

    angles = lidar.beam_angles()
    thetas = angles + pose.theta
    dx = np.cos(thetas)
    dy = np.sin(thetas)
    n = lidar.n_beams
    occ = world.occupied

    # Sphere-trace along each beam using the world's obstacle distance
    # field: jump by (clearance - resolution) while far from walls, then
    # hand the exact boundary crossing to the cell-stepping loop below.
    dist_field = world.obstacle_distance
    t0 = np.zeros(n)
    px = np.full(n, pose.x)
    py = np.full(n, pose.y)
    live = np.ones(n, dtype=bool)
    for _ in range(64):
        r, c = grid.world_to_cell(px[live], py[live])
        inb = grid.in_bounds(r, c)
        clear = np.full(r.shape, 0.0)
        clear[inb] = dist_field[r[inb], c[inb]]
        # margin: field is center-to-center; the point sits anywhere in its
        # cell and the wall boundary is half a cell before the wall center
        jump = clear - 1.5 * res
        can_jump = jump > res
        idx = np.nonzero(live)[0]
        t0[idx[can_jump]] += jump[can_jump]
        live[idx[~can_jump]] = False
        live &= t0 <= lidar.max_range
        if not live.any():
            break
        px = pose.x + t0 * dx
        py = pose.y + t0 * dy

    px = pose.x + t0 * dx
    py = pose.y + t0 * dy
    # Cell coordinates of each beam's march position, in units of cells.
    fx = (px - grid.origin[0]) / res
    fy = (py - grid.origin[1]) / res
    col = np.floor(fx).astype(np.int64)
    row = np.floor(fy).astype(np.int64)

    step_x = np.where(dx > 0, 1, -1).astype(np.int64)
    step_y = np.where(dy > 0, 1, -1).astype(np.int64)
    moves_x = np.abs(dx) > 1e-15
    moves_y = np.abs(dy) > 1e-15
    safe_dx = np.where(moves_x, np.abs(dx), 1.0)
    safe_dy = np.where(moves_y, np.abs(dy), 1.0)
    # Distance (m) along the ray to the next x/y cell boundary.
    frac_x = np.where(dx > 0, np.floor(fx) + 1.0 - fx, fx - np.floor(fx))
    frac_y = np.where(dy > 0, np.floor(fy) + 1.0 - fy, fy - np.floor(fy))
    t_max_x = np.where(moves_x, frac_x * res / safe_dx, _HUGE)
    t_max_y = np.where(moves_y, frac_y * res / safe_dy, _HUGE)
    t_delta_x = np.where(moves_x, res / safe_dx, _HUGE)
    t_delta_y = np.where(moves_y, res / safe_dy, _HUGE)

    ranges = np.full(n, lidar.no_return, dtype=np.float64)
    active = np.arange(n)
    while active.size:
        use_x = t_max_x[active] <= t_max_y[active]
        t_cross = np.where(use_x, t_max_x[active], t_max_y[active])

        # Beams whose next crossing is beyond max_range never return.
        alive = t0[active] + t_cross <= lidar.max_range
        active = active[alive]
        if not active.size:
            break
        use_x = use_x[alive]
        t_cross = t_cross[alive]

        col[active] += np.where(use_x, step_x[active], 0)
        row[active] += np.where(use_x, 0, step_y[active])
        t_max_x[active] += np.where(use_x, t_delta_x[active], 0.0)
        t_max_y[active] += np.where(use_x, 0.0, t_delta_y[active])

        r, c = row[active], col[active]
        inside = (r >= 0) & (r < grid.height) & (c >= 0) & (c < grid.width)
        hit = np.zeros(active.size, dtype=bool)
        hit[inside] = occ[r[inside], c[inside]]
        ranges[active[hit]] = t0[active[hit]] + t_cross[hit]
        # Drop beams that hit or left the grid.
        active = active[inside & ~hit]

    # Fixed RNG consumption order: noise for every beam, then dropout draws.
    noise = rng.normal(0.0, 1.0, n)
    dropout = rng.random(n)
    returned = ranges <= lidar.max_range
    if lidar.range_noise_sigma > 0:
        noisy = ranges + noise * lidar.range_noise_sigma
        ranges = np.where(returned, np.clip(noisy, 0.0, lidar.max_range), ranges)
    if lidar.dropout_prob > 0:
        ranges = np.where(dropout < lidar.dropout_prob, lidar.no_return, ranges)
    return Scan(angles, ranges, lidar.max_range)


def scans_to_jsonl(scans, path: str | Path) -> None:
    """Append-free scan log: one JSON object per line."""
    with open(path, "w") as f:
        for scan in scans:
            f.write(json.dumps({
                "angles": scan.angles.tolist(),
                "ranges": scan.ranges.tolist(),
                "max_range": scan.max_range,
            }) + "\n")


def scans_from_jsonl(path: str | Path) -> list[Scan]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(Scan(np.array(obj["angles"]), np.array(obj["ranges"]),
                        obj["max_range"]))
    return out
