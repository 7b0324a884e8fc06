"""Parametric test worlds: office floor plan, empty room, dead-end corridor.

All generators are deterministic for fixed arguments and return World
objects in a shared frame (origin at (0, 0), x right, y up). The office
layout is four rooms off a central corridor with one door each, the start
pose sits near the corridor's left entrance.
"""

from __future__ import annotations

import numpy as np

from .geometry import Pose2D
from .grid import OccupancyGrid
from .worldsim.world import ColumnPlacement, Survivor, World

WALL_T = 0.15


class _Builder:
    def __init__(self, width_m: float, height_m: float, resolution: float):
        self.res = resolution
        self.nx = int(round(width_m / resolution))
        self.ny = int(round(height_m / resolution))
        self.occ = np.zeros((self.ny, self.nx), dtype=bool)

    def _span(self, lo: float, hi: float, n: int) -> tuple[int, int]:
        a = max(int(np.floor(lo / self.res + 1e-9)), 0)
        b = min(int(np.ceil(hi / self.res - 1e-9)), n)
        return a, max(b, a)

    def fill(self, x0: float, y0: float, x1: float, y1: float,
             occupied: bool = True) -> None:
        c0, c1 = self._span(x0, x1, self.nx)
        r0, r1 = self._span(y0, y1, self.ny)
        self.occ[r0:r1, c0:c1] = occupied

    def walls(self, width_m: float, height_m: float, t: float = WALL_T) -> None:
        self.fill(0, 0, width_m, t)
        self.fill(0, height_m - t, width_m, height_m)
        self.fill(0, 0, t, height_m)
        self.fill(width_m - t, 0, width_m, height_m)

    def grid(self) -> OccupancyGrid:
        return OccupancyGrid.from_occupancy(self.occ, self.res)


def office_world(width: float = 20.0, height: float = 15.0,
                 resolution: float = 0.05, door_width: float = 1.3,
                 with_targets: bool = True) -> World:
    """Four rooms off a central corridor, one door per room."""
    b = _Builder(width, height, resolution)
    b.walls(width, height)
    mid_x = width / 2.0
    cor_lo = height / 2.0 - 1.2
    cor_hi = height / 2.0 + 1.2

    # corridor walls with a door per room
    b.fill(WALL_T, cor_lo - WALL_T, width - WALL_T, cor_lo)
    b.fill(WALL_T, cor_hi, width - WALL_T, cor_hi + WALL_T)
    # room divider walls above and below the corridor
    b.fill(mid_x - WALL_T / 2, cor_hi, mid_x + WALL_T / 2, height - WALL_T)
    b.fill(mid_x - WALL_T / 2, WALL_T, mid_x + WALL_T / 2, cor_lo)

    doors = [
        (0.22 * width, cor_hi),   # upper-left room
        (0.72 * width, cor_hi),   # upper-right room
        (0.30 * width, cor_lo - WALL_T),  # lower-left room
        (0.80 * width, cor_lo - WALL_T),  # lower-right room
    ]
    for dx, dy in doors:
        b.fill(dx - door_width / 2, dy - 1e-6, dx + door_width / 2,
               dy + WALL_T + 1e-6, occupied=False)

    survivors: list[Survivor] = []
    columns: list[ColumnPlacement] = []
    if with_targets:
        survivors = [
            Survivor((0.25 * width, 0.80 * height), (0.6, 1.7), "s0"),
            Survivor((0.78 * width, 0.22 * height), (1.7, 0.6), "s1"),
        ]
        columns = [
            ColumnPlacement((0.70 * width, 0.82 * height), (0.15, 0.15), 0.0, "col0"),
            ColumnPlacement((0.24 * width, 0.20 * height), (0.15, 0.15), 0.0, "col1"),
        ]
        for c in columns:
            b.fill(c.center[0] - c.half_extents[0], c.center[1] - c.half_extents[1],
                   c.center[0] + c.half_extents[0], c.center[1] + c.half_extents[1])

    start = Pose2D(1.0, height / 2.0, 0.0)
    return World(b.grid(), survivors, columns, flight_height=1.5, start=start)


def empty_room_world(width: float = 5.0, height: float = 5.0,
                     resolution: float = 0.05) -> World:
    b = _Builder(width, height, resolution)
    b.walls(width, height)
    return World(b.grid(), flight_height=1.5,
                 start=Pose2D(width / 2.0, height / 2.0, 0.0))


def dead_end_world(resolution: float = 0.05) -> World:
    """Corridor with a blind stub that forces entry and backtracking."""
    width, height = 12.0, 9.0
    b = _Builder(width, height, resolution)
    b.occ[:] = True
    # main corridor
    b.fill(WALL_T, 3.6, width - WALL_T, 6.0, occupied=False)
    # dead-end stub going up, closed at the top
    b.fill(5.4, 6.0, 6.6, 8.5, occupied=False)
    # small chamber at the right end
    b.fill(width - 3.4, 1.0, width - WALL_T, 6.0, occupied=False)
    return World(b.grid(), flight_height=1.5, start=Pose2D(1.0, 4.8, 0.0))
