"""Cell-wise agreement between an estimated map and ground truth.

Only cells the estimate has observed (classified free or occupied) are
scored; the fraction is matches / observed. Both grids must share
resolution and frame -- the simulation keeps everything in one frame, so
no registration is performed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import UNKNOWN, OccupancyGrid


@dataclass(frozen=True)
class AgreementResult:
    fraction: float
    observed_cells: int
    matching_cells: int


def map_agreement(est: OccupancyGrid, gt: OccupancyGrid) -> AgreementResult:
    if abs(est.resolution - gt.resolution) > 1e-12:
        raise ValueError("grids must share resolution")
    if est.logodds.shape != gt.logodds.shape:
        raise ValueError("grids must share dimensions")
    if est.origin != gt.origin:
        raise ValueError("grids must share origin")
    est_cls = est.classify()
    gt_cls = gt.classify()
    observed = est_cls != UNKNOWN
    n_observed = int(observed.sum())
    if n_observed == 0:
        return AgreementResult(0.0, 0, 0)
    matches = int((est_cls[observed] == gt_cls[observed]).sum())
    return AgreementResult(matches / n_observed, n_observed, matches)
