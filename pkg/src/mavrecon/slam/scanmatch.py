"""Hill-climbing scan matcher over a likelihood field.

Greedy coordinate search on (x, y, theta) with step halving: from the
initial steps down to (resolution / 4, 0.25 deg). The score of a pose is
the mean endpoint likelihood of the scan's returning beams, decimated to at
most `max_beams` (localization packages conventionally score a subset of
beams; the full scan adds cost, not information, at these grid sizes).
Deterministic: fixed neighbor order, strict-improvement moves, and the
best pose visited anywhere in the search is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import Pose2D
from ..grid import OccupancyGrid
from ..worldsim.lidar import Scan
from .likelihood import LikelihoodField


@dataclass(frozen=True)
class ScanMatchParams:
    step_xy: float = 0.08
    step_theta: float = math.radians(2.0)
    min_step_theta: float = math.radians(0.25)
    sigma_hit: float = 0.2
    max_beams: int = 60
    # keep the seed unless the search beats it by this much: the score
    # surface is near-flat within a cell, and chasing sub-cell wiggles turns
    # repeated integration into a random walk
    min_gain: float = 2e-3


@dataclass(frozen=True)
class ScanMatchResult:
    pose: Pose2D
    score: float
    low_confidence: bool = False


def _decimate(angles: np.ndarray, ranges: np.ndarray, max_beams: int):
    if angles.size <= max_beams:
        return angles, ranges
    idx = np.linspace(0, angles.size - 1, max_beams).astype(int)
    return angles[idx], ranges[idx]


def scan_match(grid: OccupancyGrid, scan: Scan, seed_pose: Pose2D,
               params: ScanMatchParams = ScanMatchParams(),
               field: LikelihoodField | None = None) -> ScanMatchResult:
    """Refine `seed_pose` so the scan endpoints align with the map."""
    if field is None:
        field = LikelihoodField(grid, params.sigma_hit)
    if field.n_occupied == 0:
        raise ValueError("scan matching needs at least one occupied cell")

    hits = scan.hits
    angles, ranges = _decimate(scan.angles[hits], scan.ranges[hits],
                               params.max_beams)
    if angles.size == 0:
        return ScanMatchResult(seed_pose, 0.0, low_confidence=True)

    inv_two_sigma_sq = 0.5 / (params.sigma_hit ** 2)

    def scores_at(cands: list[tuple[float, float, float]]) -> np.ndarray:
        """Mean endpoint likelihood for several candidate poses in one query."""
        arr = np.asarray(cands)
        a = arr[:, 2:3] + angles[None, :]
        px = arr[:, 0:1] + ranges[None, :] * np.cos(a)
        py = arr[:, 1:2] + ranges[None, :] * np.sin(a)
        d = field.distances(np.column_stack((px.ravel(), py.ravel())))
        lik = np.exp(-inv_two_sigma_sq * d ** 2).reshape(len(cands), -1)
        return lik.mean(axis=1)

    def score_at(x: float, y: float, th: float) -> float:
        return float(scores_at([(x, y, th)])[0])

    min_xy = grid.resolution / 4.0
    min_th = params.min_step_theta
    levels = []
    sx, sth = params.step_xy, params.step_theta
    while True:
        levels.append((max(sx, min_xy), max(sth, min_th)))
        if sx <= min_xy and sth <= min_th:
            break
        sx, sth = sx / 2.0, sth / 2.0

    cur = (seed_pose.x, seed_pose.y, seed_pose.theta)
    cur_score = score_at(*cur)
    seed_score = cur_score
    best, best_score = cur, cur_score

    for sx, sth in levels:
        while True:
            neighbors = [
                (cur[0] + sx, cur[1], cur[2]),
                (cur[0] - sx, cur[1], cur[2]),
                (cur[0], cur[1] + sx, cur[2]),
                (cur[0], cur[1] - sx, cur[2]),
                (cur[0], cur[1], cur[2] + sth),
                (cur[0], cur[1], cur[2] - sth),
            ]
            scores = scores_at(neighbors)
            i = int(np.argmax(scores))
            if scores[i] > best_score:
                best, best_score = neighbors[i], float(scores[i])
            if scores[i] <= cur_score:
                break
            cur, cur_score = neighbors[i], float(scores[i])

    if best_score < seed_score + params.min_gain:
        return ScanMatchResult(seed_pose, seed_score, low_confidence=False)
    return ScanMatchResult(Pose2D(*best), best_score, low_confidence=False)
