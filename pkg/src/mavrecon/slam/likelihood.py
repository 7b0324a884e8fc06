"""Likelihood field over a map: distance to the nearest occupied cell.

Endpoint likelihood is exp(-d^2 / (2 sigma_hit^2)) where d comes from a
precomputed euclidean distance transform of the occupied mask, so points
inside an occupied cell score distance zero -- which makes the generating
pose of a scan a true score maximum on a map built from that scan. Queries
are constant-time array lookups; points off the map count as infinitely far.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..grid import OccupancyGrid


class LikelihoodField:
    def __init__(self, grid: OccupancyGrid, sigma_hit: float = 0.2,
                 window: tuple[float, float, float, float] | None = None,
                 margin: float = 1.0):
        """`window` = (x_lo, x_hi, y_lo, y_hi) restricts the transform to a
        crop around the points that will be queried (plus `margin`); the
        field is exact for queries more than `margin` inside the crop, and
        everything this package queries lies within 3*sigma of a wall."""
        if sigma_hit <= 0:
            raise ValueError("sigma_hit must be positive")
        self.sigma_hit = sigma_hit
        self.resolution = grid.resolution
        self.origin = grid.origin
        occ = grid.occupied_mask()
        self._row0 = 0
        self._col0 = 0
        if window is not None:
            x_lo, x_hi, y_lo, y_hi = window
            r0, c0 = grid.world_to_cell(x_lo - margin, y_lo - margin)
            r1, c1 = grid.world_to_cell(x_hi + margin, y_hi + margin)
            r0 = max(int(r0), 0)
            c0 = max(int(c0), 0)
            r1 = min(int(r1) + 1, occ.shape[0])
            c1 = min(int(c1) + 1, occ.shape[1])
            if r1 > r0 and c1 > c0:
                occ = occ[r0:r1, c0:c1]
                self._row0, self._col0 = r0, c0
        self.shape = occ.shape
        self.n_occupied = int(occ.sum())
        if self.n_occupied:
            self._dist = (ndimage.distance_transform_edt(~occ)
                          * grid.resolution).astype(np.float64)
        else:
            self._dist = None

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Distance (m) from each (x, y) point to the nearest occupied cell.

        The transform is sampled bilinearly in cell-center coordinates, so
        the field is continuous and its gradient does not vanish inside
        occupied cells (which would bias scan matching into walls).
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if self._dist is None:
            return np.full(len(points), np.inf)
        col = (points[:, 0] - self.origin[0]) / self.resolution - 0.5 - self._col0
        row = (points[:, 1] - self.origin[1]) / self.resolution - 0.5 - self._row0
        out = ndimage.map_coordinates(self._dist, [row, col], order=1,
                                      mode="nearest")
        inside = (row >= -0.5) & (row <= self.shape[0] - 0.5) \
            & (col >= -0.5) & (col <= self.shape[1] - 0.5)
        out[~inside] = np.inf
        return out

    def likelihoods(self, points: np.ndarray) -> np.ndarray:
        d = self.distances(points)
        out = np.zeros(len(d))
        finite = np.isfinite(d)
        out[finite] = np.exp(-0.5 * (d[finite] / self.sigma_hit) ** 2)
        return out

    def score(self, points: np.ndarray) -> float:
        """Mean endpoint likelihood in [0, 1]; 0 when there is nothing to match."""
        if len(points) == 0 or self._dist is None:
            return 0.0
        return float(self.likelihoods(points).mean())
