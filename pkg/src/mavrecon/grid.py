"""Log-odds occupancy grid.

One grid type backs the ground-truth world mask, the SLAM map, and the
planner costmap. Cells accumulate additive log-odds evidence, clamped to
[l_min, l_max]; classification uses probability thresholds (p < 0.25 free,
p > 0.65 occupied, otherwise unknown).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FREE = np.int8(0)
OCCUPIED = np.int8(1)
UNKNOWN = np.int8(2)

# ROS map_server gray levels for PGM export.
_PGM_FREE = 254
_PGM_OCCUPIED = 0
_PGM_UNKNOWN = 205

DEFAULT_CLAMP = 5.0
FREE_P = 0.25
OCC_P = 0.65


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


@dataclass
class OccupancyGrid:
    resolution: float
    origin: tuple[float, float]
    logodds: np.ndarray
    l_min: float = -DEFAULT_CLAMP
    l_max: float = DEFAULT_CLAMP
    free_p: float = FREE_P
    occ_p: float = OCC_P
    _free_l: float = field(init=False, repr=False)
    _occ_l: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not (self.free_p < 0.5 < self.occ_p):
            raise ValueError("classification thresholds must satisfy free_p < 0.5 < occ_p")
        self.logodds = np.asarray(self.logodds, dtype=np.float32)
        if self.logodds.ndim != 2:
            raise ValueError("logodds must be a 2D array")
        self._free_l = _logit(self.free_p)
        self._occ_l = _logit(self.occ_p)

    @classmethod
    def empty(cls, width: int, height: int, resolution: float,
              origin: tuple[float, float] = (0.0, 0.0), **kw) -> "OccupancyGrid":
        return cls(resolution, origin, np.zeros((height, width), dtype=np.float32), **kw)

    @classmethod
    def from_occupancy(cls, occupied: np.ndarray, resolution: float,
                       origin: tuple[float, float] = (0.0, 0.0), **kw) -> "OccupancyGrid":
        """Binary grid: True cells saturate occupied, False cells saturate free."""
        g = cls.empty(occupied.shape[1], occupied.shape[0], resolution, origin, **kw)
        g.logodds[:] = np.where(occupied, g.l_max, g.l_min)
        return g

    @property
    def height(self) -> int:
        return self.logodds.shape[0]

    @property
    def width(self) -> int:
        return self.logodds.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        """(width, height) in meters."""
        return (self.width * self.resolution, self.height * self.resolution)

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.resolution, self.origin, self.logodds.copy(),
                             self.l_min, self.l_max, self.free_p, self.occ_p)

    def world_to_cell(self, x, y):
        """World coordinates to (row, col). Vectorized; no bounds check."""
        col = np.floor((np.asarray(x) - self.origin[0]) / self.resolution).astype(np.int64)
        row = np.floor((np.asarray(y) - self.origin[1]) / self.resolution).astype(np.int64)
        return row, col

    def cell_to_world(self, row, col):
        """Cell center of (row, col) in world coordinates."""
        x = self.origin[0] + (np.asarray(col) + 0.5) * self.resolution
        y = self.origin[1] + (np.asarray(row) + 0.5) * self.resolution
        return x, y

    def in_bounds(self, row, col):
        return (np.asarray(row) >= 0) & (np.asarray(row) < self.height) \
            & (np.asarray(col) >= 0) & (np.asarray(col) < self.width)

    def contains_point(self, x: float, y: float) -> bool:
        r, c = self.world_to_cell(x, y)
        return bool(self.in_bounds(r, c))

    def clamp(self) -> None:
        np.clip(self.logodds, self.l_min, self.l_max, out=self.logodds)

    def classify(self) -> np.ndarray:
        """Per-cell int8 classification (FREE / OCCUPIED / UNKNOWN)."""
        out = np.full(self.logodds.shape, UNKNOWN, dtype=np.int8)
        out[self.logodds < self._free_l] = FREE
        out[self.logodds > self._occ_l] = OCCUPIED
        return out

    def occupied_mask(self) -> np.ndarray:
        return self.logodds > self._occ_l

    def free_mask(self) -> np.ndarray:
        return self.logodds < self._free_l

    def unknown_mask(self) -> np.ndarray:
        return ~(self.occupied_mask() | self.free_mask())


def write_pgm(grid: OccupancyGrid, path: str | Path, binary: bool = True) -> None:
    """Export classification as PGM (free=254, occupied=0, unknown=205)."""
    cls = grid.classify()
    img = np.full(cls.shape, _PGM_UNKNOWN, dtype=np.uint8)
    img[cls == FREE] = _PGM_FREE
    img[cls == OCCUPIED] = _PGM_OCCUPIED
    # row 0 of the PGM is the top of the image = highest y
    img = np.flipud(img)
    path = Path(path)
    header = f"P5\n{grid.width} {grid.height}\n255\n"
    if binary:
        with open(path, "wb") as f:
            f.write(header.encode("ascii"))
            f.write(img.tobytes())
    else:
        lines = [f"P2\n{grid.width} {grid.height}\n255"]
        for row in img:
            lines.append(" ".join(str(int(v)) for v in row))
        path.write_text("\n".join(lines) + "\n")


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a P2 or P5 PGM into a uint16 array (row 0 = top of image)."""
    data = Path(path).read_bytes()
    # Parse header tokens, skipping comments. P5 pixel data starts right after
    # the single whitespace byte following maxval.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"malformed PGM header in {path}")
        tokens.append(data[start:pos])
    magic = tokens[0]
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as e:
        raise ValueError(f"malformed PGM header in {path}: {e}") from None
    if width <= 0 or height <= 0 or maxval <= 0:
        raise ValueError(f"malformed PGM dimensions in {path}")
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        count = width * height
        pixels = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
        if pixels.size != count:
            raise ValueError(f"truncated PGM pixel data in {path}")
        return pixels.astype(np.uint16).reshape(height, width)
    if magic == b"P2":
        body = data[pos:].split(b"#")[0] if b"#" in data[pos:] else data[pos:]
        values = body.split()
        if len(values) < width * height:
            raise ValueError(f"truncated PGM pixel data in {path}")
        arr = np.array([int(v) for v in values[: width * height]], dtype=np.uint16)
        return arr.reshape(height, width)
    raise ValueError(f"unsupported PGM magic {magic!r} in {path}")
