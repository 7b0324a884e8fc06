"""Ground-truth world: binary occupancy grid plus survivor and column placements.

Worlds are loaded from a PGM image and a plain-text metadata file of
`key = value` lines. Pixels convert to occupancy the map_server way
(occ = (maxval - pixel) / maxval, so dark means occupied); occ >= occupied_thresh
is occupied, occ <= free_thresh is free, and intermediate values are treated
as occupied so unmodeled gray never reads as flyable space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..geometry import Pose2D
from ..grid import OccupancyGrid, read_pgm, write_pgm


@dataclass(frozen=True)
class Survivor:
    center: tuple[float, float]
    extent: tuple[float, float]
    id: str


@dataclass(frozen=True)
class ColumnPlacement:
    center: tuple[float, float]
    half_extents: tuple[float, float]
    yaw: float
    spec_id: str


@dataclass
class World:
    gt_grid: OccupancyGrid
    survivors: list[Survivor] = field(default_factory=list)
    columns: list[ColumnPlacement] = field(default_factory=list)
    flight_height: float = 1.5
    start: Pose2D | None = None
    _occupied: np.ndarray | None = field(default=None, repr=False)
    _obstacle_dist: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.flight_height <= 0:
            raise ValueError("flight_height must be positive")
        cls = self.gt_grid.classify()
        from ..grid import UNKNOWN
        if np.any(cls == UNKNOWN):
            raise ValueError("ground-truth grid must not contain unknown cells")
        for s in self.survivors:
            if not self.gt_grid.contains_point(*s.center):
                raise ValueError(f"survivor {s.id} lies outside grid bounds")
        for c in self.columns:
            if not self.gt_grid.contains_point(*c.center):
                raise ValueError(f"column {c.spec_id} lies outside grid bounds")

    @property
    def occupied(self) -> np.ndarray:
        if self._occupied is None:
            self._occupied = self.gt_grid.occupied_mask()
        return self._occupied

    @property
    def obstacle_distance(self) -> np.ndarray:
        """Per-cell distance (m) to the nearest occupied cell."""
        if self._obstacle_dist is None:
            self._obstacle_dist = ndimage.distance_transform_edt(
                ~self.occupied) * self.gt_grid.resolution
        return self._obstacle_dist

    def is_free(self, x: float, y: float) -> bool:
        r, c = self.gt_grid.world_to_cell(x, y)
        if not self.gt_grid.in_bounds(r, c):
            return False
        return not self.occupied[int(r), int(c)]

    def clearance(self, x: float, y: float) -> float:
        r, c = self.gt_grid.world_to_cell(x, y)
        if not self.gt_grid.in_bounds(r, c):
            return 0.0
        return float(self.obstacle_distance[int(r), int(c)])

    def reachable_free(self, from_pose: Pose2D) -> np.ndarray:
        """Free cells 8-connected to the cell under `from_pose`."""
        free = ~self.occupied
        labels, _ = ndimage.label(free, structure=np.ones((3, 3), dtype=int))
        r, c = self.gt_grid.world_to_cell(from_pose.x, from_pose.y)
        if not self.gt_grid.in_bounds(r, c) or not free[int(r), int(c)]:
            raise ValueError("pose is not in a free cell")
        return labels == labels[int(r), int(c)]


def parse_meta(path: str | Path) -> dict:
    """Parse a `key = value` metadata file; '#' starts a comment."""
    meta: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed metadata line: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        meta[key] = value.strip().strip('"').strip("'")
    return meta


def _parse_floats(value: str, n_min: int, key: str) -> list[str]:
    parts = [p for p in value.replace(",", " ").split() if p]
    if len(parts) < n_min:
        raise ValueError(f"{key} needs at least {n_min} fields, got {value!r}")
    return parts


def load_world(map_file: str | Path, meta_file: str | Path) -> World:
    meta = parse_meta(meta_file)
    try:
        resolution = float(meta["resolution"])
    except KeyError:
        raise ValueError("metadata must declare resolution") from None
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    origin = (float(meta.get("origin_x", 0.0)), float(meta.get("origin_y", 0.0)))
    occupied_thresh = float(meta.get("occupied_thresh", 0.65))
    free_thresh = float(meta.get("free_thresh", 0.196))
    flight_height = float(meta.get("flight_height", 1.5))

    pixels = read_pgm(map_file)
    maxval = max(int(pixels.max()), 255) if pixels.size else 255
    occ_value = (maxval - pixels.astype(np.float64)) / maxval
    if occupied_thresh <= free_thresh:
        raise ValueError("occupied_thresh must exceed free_thresh")
    # free only below free_thresh; intermediate gray is conservatively occupied
    occupied = occ_value > free_thresh
    occupied = np.flipud(occupied)  # PGM row 0 is the top of the image

    grid = OccupancyGrid.from_occupancy(occupied, resolution, origin)

    survivors = []
    columns = []
    for key in sorted(meta):
        if key.startswith("survivor["):
            parts = _parse_floats(meta[key], 4, key)
            sid = parts[4] if len(parts) > 4 else key[len("survivor["):-1]
            survivors.append(Survivor((float(parts[0]), float(parts[1])),
                                      (float(parts[2]), float(parts[3])), sid))
        elif key.startswith("column["):
            parts = _parse_floats(meta[key], 4, key)
            yaw = float(parts[4]) if len(parts) > 4 else 0.0
            cid = parts[5] if len(parts) > 5 else key[len("column["):-1]
            columns.append(ColumnPlacement((float(parts[0]), float(parts[1])),
                                           (float(parts[2]), float(parts[3])), yaw, cid))

    start = None
    if "start_x" in meta and "start_y" in meta:
        start = Pose2D(float(meta["start_x"]), float(meta["start_y"]),
                       float(meta.get("start_theta", 0.0)))

    return World(grid, survivors, columns, flight_height, start)


def save_world(world: World, map_file: str | Path, meta_file: str | Path) -> None:
    write_pgm(world.gt_grid, map_file)
    g = world.gt_grid
    lines = [
        f"resolution = {g.resolution}",
        f"origin_x = {g.origin[0]}",
        f"origin_y = {g.origin[1]}",
        "occupied_thresh = 0.65",
        "free_thresh = 0.196",
        f"flight_height = {world.flight_height}",
    ]
    if world.start is not None:
        lines += [f"start_x = {world.start.x}", f"start_y = {world.start.y}",
                  f"start_theta = {world.start.theta}"]
    for i, s in enumerate(world.survivors):
        lines.append(f"survivor[{i}] = {s.center[0]}, {s.center[1]}, "
                     f"{s.extent[0]}, {s.extent[1]}, {s.id}")
    for i, c in enumerate(world.columns):
        lines.append(f"column[{i}] = {c.center[0]}, {c.center[1]}, "
                     f"{c.half_extents[0]}, {c.half_extents[1]}, {c.yaw}, {c.spec_id}")
    Path(meta_file).write_text("\n".join(lines) + "\n")
