"""Frontier detection and goal selection over the evolving map.

A frontier cell is a free cell with at least one unknown 8-neighbor;
frontiers are 8-connected clusters of such cells, small clusters are
discarded as sensor speckle. Goal selection scores each frontier by
size / (eps + path cost) with path cost from an 8-connected shortest-path
field over the costmap, so a frontier behind a wall pays for the detour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .geometry import Pose2D
from .grid import FREE, UNKNOWN, OccupancyGrid

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class ExploreParams:
    min_frontier_size: int = 5
    utility_eps: float = 1e-3
    nearest_only: bool = False  # rank purely by path cost instead of size-weighted utility
    snap_radius: float = 0.5    # frontier approach point may sit this far from the cluster


@dataclass
class Frontier:
    cells: np.ndarray           # (k, 2) row, col
    centroid: tuple[float, float]  # world coordinates
    size: int
    centroid_cell: tuple[float, float]  # (row, col) means, for ordering


def find_frontiers(grid: OccupancyGrid, min_size: int = 5,
                   min_unknown_region: int = 0) -> list[Frontier]:
    """Frontier clusters: free cells 8-adjacent to unknown space.

    `min_unknown_region` ignores unknown components smaller than that many
    cells -- sensor-noise slivers along mapped walls read as unknown but are
    not exploration targets.
    """
    cls = grid.classify()
    free = cls == FREE
    unknown = cls == UNKNOWN
    if min_unknown_region > 1 and unknown.any():
        labels, n = ndimage.label(unknown, structure=_EIGHT)
        sizes = np.bincount(labels.ravel())
        keep = sizes >= min_unknown_region
        keep[0] = False
        unknown = keep[labels]
    near_unknown = ndimage.binary_dilation(unknown, structure=_EIGHT)
    frontier_mask = free & near_unknown
    labels, n = ndimage.label(frontier_mask, structure=_EIGHT)
    out: list[Frontier] = []
    for lbl in range(1, n + 1):
        rows, cols = np.nonzero(labels == lbl)
        if rows.size < min_size:
            continue
        cr, cc = float(rows.mean()), float(cols.mean())
        x, y = grid.cell_to_world(cr, cc)  # mean of cell centers
        out.append(Frontier(np.column_stack((rows, cols)), (float(x), float(y)),
                            int(rows.size), (cr, cc)))
    out.sort(key=lambda f: (-f.size, f.centroid_cell[0], f.centroid_cell[1]))
    return out


def path_cost_field(traversable: np.ndarray, resolution: float,
                    start_cell: tuple[int, int],
                    snap_start: bool = False) -> np.ndarray:
    """Shortest-path distance (m) from start to every cell, 8-connected.

    Unreachable or non-traversable cells are +inf. With `snap_start`, a
    non-traversable start (pose pinched into the inflation band) is replaced
    by the nearest traversable cell.
    """
    h, w = traversable.shape
    r0, c0 = start_cell
    inside = 0 <= r0 < h and 0 <= c0 < w
    if (not inside or not traversable[r0, c0]) and snap_start:
        rows, cols = np.nonzero(traversable)
        if rows.size == 0:
            return np.full((h, w), np.inf)
        pick = int(np.argmin((rows - r0) ** 2 + (cols - c0) ** 2))
        r0, c0 = int(rows[pick]), int(cols[pick])
        inside = True
    if not inside or not traversable[r0, c0]:
        return np.full((h, w), np.inf)
    idx = np.arange(h * w).reshape(h, w)
    rows_i: list[np.ndarray] = []
    cols_j: list[np.ndarray] = []
    data: list[np.ndarray] = []
    shifts = [(-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
              (-1, -1, math.sqrt(2)), (-1, 1, math.sqrt(2)),
              (1, -1, math.sqrt(2)), (1, 1, math.sqrt(2))]
    for dr, dc, w_mult in shifts:
        src = traversable[max(0, -dr):h - max(0, dr), max(0, -dc):w - max(0, dc)]
        dst = traversable[max(0, dr):h - max(0, -dr), max(0, dc):w - max(0, -dc)]
        ok = src & dst
        i = idx[max(0, -dr):h - max(0, dr), max(0, -dc):w - max(0, dc)][ok]
        j = idx[max(0, dr):h - max(0, -dr), max(0, dc):w - max(0, -dc)][ok]
        rows_i.append(i)
        cols_j.append(j)
        data.append(np.full(i.size, w_mult * resolution))
    graph = coo_matrix((np.concatenate(data),
                        (np.concatenate(rows_i), np.concatenate(cols_j))),
                       shape=(h * w, h * w)).tocsr()
    dist = dijkstra(graph, directed=False, indices=r0 * w + c0)
    return dist.reshape(h, w)


def _approach_cell(frontier: Frontier, dist: np.ndarray, radius_cells: int):
    """Reachable cell near the cluster with the lowest path cost, or None.

    Frontier cells frequently sit inside the obstacle inflation band or
    behind a sliver of unknown, so the navigation target is the cheapest
    traversable cell within `radius_cells` of the cluster.
    """
    h, w = dist.shape
    r0 = max(int(frontier.cells[:, 0].min()) - radius_cells, 0)
    r1 = min(int(frontier.cells[:, 0].max()) + radius_cells + 1, h)
    c0 = max(int(frontier.cells[:, 1].min()) - radius_cells, 0)
    c1 = min(int(frontier.cells[:, 1].max()) + radius_cells + 1, w)
    mask = np.zeros((r1 - r0, c1 - c0), dtype=bool)
    mask[frontier.cells[:, 0] - r0, frontier.cells[:, 1] - c0] = True
    if radius_cells > 0:
        ball = np.hypot(*np.mgrid[-radius_cells:radius_cells + 1,
                                  -radius_cells:radius_cells + 1]) <= radius_cells
        mask = ndimage.binary_dilation(mask, structure=ball)
    window = dist[r0:r1, c0:c1]
    cand = np.where(mask, window, np.inf)
    if not np.isfinite(cand).any():
        return None
    flat = int(np.argmin(cand))
    rr, cc = np.unravel_index(flat, cand.shape)
    return (r0 + int(rr), c0 + int(cc)), float(cand[rr, cc])


def choose_goal(frontiers: list[Frontier], pose: Pose2D, costmap,
                params: ExploreParams = ExploreParams()
                ) -> tuple[Pose2D, int] | None:
    """Pick the best reachable frontier; None means exploration is complete.

    The returned goal is the cheapest traversable approach cell near the
    cluster, headed toward the frontier centroid.
    """
    if not frontiers:
        return None
    grid_res = costmap.resolution
    r0, c0 = costmap.world_to_cell(pose.x, pose.y)
    dist = path_cost_field(costmap.traversable, grid_res, (int(r0), int(c0)),
                           snap_start=True)
    radius_cells = max(int(math.ceil(params.snap_radius / grid_res)), 0)

    best_idx = -1
    best_utility = -math.inf
    best_goal: Pose2D | None = None
    for fi, f in enumerate(frontiers):
        approach = _approach_cell(f, dist, radius_cells)
        if approach is None:
            continue
        (gr, gc), path_cost = approach
        utility = (-path_cost if params.nearest_only
                   else f.size / (params.utility_eps + path_cost))
        if utility > best_utility:
            gx, gy = costmap.cell_to_world(gr, gc)
            heading = math.atan2(f.centroid[1] - gy, f.centroid[0] - gx)
            if abs(f.centroid[0] - gx) < 1e-9 and abs(f.centroid[1] - gy) < 1e-9:
                heading = math.atan2(gy - pose.y, gx - pose.x)
            best_idx = fi
            best_utility = utility
            best_goal = Pose2D(float(gx), float(gy), heading)
    if best_idx < 0:
        return None
    return best_goal, best_idx


def frontiers_to_json(frontiers: list[Frontier]) -> list[dict]:
    return [{
        "size": f.size,
        "centroid": [f.centroid[0], f.centroid[1]],
        "cells": f.cells.tolist(),
    } for f in frontiers]
