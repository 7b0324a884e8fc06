"""Costmap: obstacle inflation over an occupancy grid classification.

Cells within `lethal_radius` of an obstacle are lethal; beyond that, cost
decays exponentially and reaches free at `inflation_radius`. Unknown cells
can be treated as obstacles (local planning default) or left traversable
(frontier goal handling carves them near the goal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..grid import OccupancyGrid

LETHAL = 1.0


@dataclass(frozen=True)
class CostmapParams:
    lethal_radius: float = 0.0       # inflate obstacles by this much (robot radius + margin)
    inflation_radius: float = 0.0    # decaying-cost band ends here
    unknown_is_lethal: bool = True
    cost_decay: float = 5.0          # e-folding count across the inflation band


@dataclass
class Costmap:
    resolution: float
    origin: tuple[float, float]
    lethal: np.ndarray             # bool
    cost: np.ndarray               # float in [0, 1], 1 = lethal
    clearance: np.ndarray          # distance (m) to nearest lethal cell
    unknown: np.ndarray            # classification was unknown
    params: CostmapParams = field(default_factory=CostmapParams)

    @property
    def shape(self) -> tuple[int, int]:
        return self.lethal.shape

    @property
    def traversable(self) -> np.ndarray:
        return ~self.lethal

    def world_to_cell(self, x, y):
        col = np.floor((np.asarray(x) - self.origin[0]) / self.resolution).astype(np.int64)
        row = np.floor((np.asarray(y) - self.origin[1]) / self.resolution).astype(np.int64)
        return row, col

    def cell_to_world(self, row, col):
        x = self.origin[0] + (np.asarray(col) + 0.5) * self.resolution
        y = self.origin[1] + (np.asarray(row) + 0.5) * self.resolution
        return x, y

    def in_bounds(self, row, col):
        h, w = self.shape
        return (np.asarray(row) >= 0) & (np.asarray(row) < h) \
            & (np.asarray(col) >= 0) & (np.asarray(col) < w)

    def is_lethal_at(self, x, y):
        """Lethal check for world points; out-of-bounds counts as lethal."""
        r, c = self.world_to_cell(x, y)
        scalar = np.ndim(r) == 0
        r, c = np.atleast_1d(r), np.atleast_1d(c)
        inside = self.in_bounds(r, c)
        out = np.ones(r.shape, dtype=bool)
        out[inside] = self.lethal[r[inside], c[inside]]
        return bool(out[0]) if scalar else out

    def clearance_at(self, x, y):
        """Distance to the nearest lethal cell; 0 outside the map."""
        r, c = self.world_to_cell(x, y)
        scalar = np.ndim(r) == 0
        r, c = np.atleast_1d(r), np.atleast_1d(c)
        inside = self.in_bounds(r, c)
        out = np.zeros(r.shape, dtype=float)
        out[inside] = self.clearance[r[inside], c[inside]]
        return float(out[0]) if scalar else out

    def free_area(self) -> float:
        return float(np.count_nonzero(~self.lethal)) * self.resolution ** 2


def inflate(grid: OccupancyGrid, radius: float,
            params: CostmapParams | None = None,
            carve: list[tuple[float, float, float]] | tuple[float, float, float]
            | None = None) -> Costmap:
    """Build a costmap with inflation band `radius` around obstacles.

    Each `carve` entry (x, y, carve_radius) treats unknown cells within
    carve_radius of (x, y) as free before inflating: a frontier goal abuts
    unexplored space by definition, and the vehicle's own blind wedge must
    not make its footprint lethal. Occupied cells are never carved.
    """
    if radius < 0:
        raise ValueError("inflation radius must be non-negative")
    if params is None:
        params = CostmapParams(inflation_radius=radius)
    elif params.inflation_radius != radius:
        params = CostmapParams(params.lethal_radius, radius,
                               params.unknown_is_lethal, params.cost_decay)
    occupied = grid.occupied_mask()
    unknown = grid.unknown_mask()
    effective_unknown = unknown
    carves = [] if carve is None else (
        [carve] if isinstance(carve, tuple) else list(carve))
    if carves and params.unknown_is_lethal:
        rows, cols = np.nonzero(unknown)
        if rows.size:
            cx, cy = grid.cell_to_world(rows, cols)
            near = np.zeros(rows.size, dtype=bool)
            for x0, y0, cr in carves:
                near |= (cx - x0) ** 2 + (cy - y0) ** 2 <= cr ** 2
            effective_unknown = unknown.copy()
            effective_unknown[rows[near], cols[near]] = False

    # Inflation grows occupied cells only; unknown cells are bare lethal
    # (ignorance is not a wall, but it is not traversable either).
    if np.any(occupied):
        dist = ndimage.distance_transform_edt(~occupied) * grid.resolution
    else:
        dist = np.full(grid.logodds.shape, np.inf)
    lethal = dist <= params.lethal_radius
    if params.unknown_is_lethal:
        lethal = lethal | effective_unknown

    cost = np.zeros(grid.logodds.shape, dtype=np.float64)
    cost[lethal] = LETHAL
    band = ~lethal & (dist < radius)
    if np.any(band):
        width = max(radius - params.lethal_radius, 1e-9)
        decay = params.cost_decay / width
        cost[band] = np.exp(-decay * (dist[band] - params.lethal_radius))

    if np.any(lethal):
        clearance = ndimage.distance_transform_edt(~lethal) * grid.resolution
    else:
        clearance = np.full(grid.logodds.shape, np.inf)
    return Costmap(grid.resolution, grid.origin, lethal, cost, clearance,
                   unknown, params)
