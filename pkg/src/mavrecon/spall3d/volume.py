"""Spall volume by horizontal slicing against the recovered prism.

Each slice projects its points into the footprint frame and measures, per
angular bin around the footprint center, the outermost point radius
(clamped to the ideal rectangle boundary). Bins with no points count as
intact -- occlusion is not spalling. The ideal area uses the same polar
discretization as the measurement, so a fully sampled pristine slice has
exactly zero deficit. Volume is the sum of per-slice area deficits times
slice thickness.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cloud import Cloud
from .prism import PrismModel


@dataclass(frozen=True)
class SliceRow:
    z_lo: float
    z_hi: float
    ideal_area: float
    measured_area: float
    deficit: float
    n_points: int
    assumed_intact: bool


@dataclass
class SpallReport:
    slices: list[SliceRow]
    volume_m3: float
    slice_thickness: float
    n_bins: int
    prism_half_extents: tuple[float, float] = (0.0, 0.0)
    empty_slices: int = 0

    @property
    def volume_cm3(self) -> float:
        return self.volume_m3 * 1e6

    def to_dict(self) -> dict:
        return {
            "volume_m3": self.volume_m3,
            "volume_cm3": self.volume_cm3,
            "slice_thickness": self.slice_thickness,
            "n_bins": self.n_bins,
            "prism_half_extents": list(self.prism_half_extents),
            "empty_slices": self.empty_slices,
            "slices": [{
                "z_lo": s.z_lo, "z_hi": s.z_hi,
                "ideal_area": s.ideal_area, "measured_area": s.measured_area,
                "deficit": s.deficit, "n_points": s.n_points,
                "assumed_intact": s.assumed_intact,
            } for s in self.slices],
        }

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["z_lo", "z_hi", "ideal_area_m2", "measured_area_m2",
                             "deficit_m2", "n_points", "assumed_intact"])
            for s in self.slices:
                writer.writerow([f"{s.z_lo:.6f}", f"{s.z_hi:.6f}",
                                 f"{s.ideal_area:.9f}", f"{s.measured_area:.9f}",
                                 f"{s.deficit:.9f}", s.n_points, int(s.assumed_intact)])


def spall_volume(cloud: Cloud, prism: PrismModel, slice_h: float = 0.01,
                 n_bins: int = 360) -> SpallReport:
    if slice_h <= 0:
        raise ValueError("slice thickness must be positive")
    if n_bins < 8:
        raise ValueError("need at least 8 angular bins")

    local = prism.to_footprint_frame(cloud.points)
    z0, z1 = prism.z_range
    # Slice from the ground up on a canonical grid: snapping the base to a
    # multiple of slice_h keeps horizontal carve faces that coincide with a
    # slice boundary from bleeding surface points into the slice below.
    z0 = math.floor(z0 / slice_h + 1e-9) * slice_h
    d_theta = 2.0 * math.pi / n_bins
    bin_centers = -math.pi + (np.arange(n_bins) + 0.5) * d_theta
    r_ideal = prism.rectangle_radius(bin_centers)
    ideal_area = float(0.5 * np.sum(r_ideal ** 2) * d_theta)

    n_slices = max(int(math.ceil((z1 - z0) / slice_h - 1e-9)), 1)

    z = local[:, 2]
    angles = np.arctan2(local[:, 1], local[:, 0])
    radii = np.hypot(local[:, 0], local[:, 1])
    bins = np.clip(((angles + math.pi) / d_theta).astype(np.int64), 0, n_bins - 1)
    # Points exactly on an interior slice boundary are horizontal-surface
    # samples (a notch floor or ceiling); whichever side they land on they
    # mask that slice's deficit, so they are excluded from the measurement.
    frac = (z - z0) / slice_h
    nearest = np.round(frac)
    on_boundary = (np.abs(frac - nearest) < 1e-9) & (nearest >= 1) \
        & (nearest <= n_slices - 1)
    slice_idx = np.floor(frac + 1e-9).astype(np.int64)
    in_range = (slice_idx >= 0) & (z <= z1 + 1e-12) & ~on_boundary
    slice_idx = np.minimum(slice_idx, n_slices - 1)

    key = slice_idx[in_range] * n_bins + bins[in_range]
    r_max = np.zeros(n_slices * n_bins)
    np.maximum.at(r_max, key, radii[in_range])
    hit = np.zeros(n_slices * n_bins, dtype=bool)
    hit[key] = True
    r_max = r_max.reshape(n_slices, n_bins)
    hit = hit.reshape(n_slices, n_bins)
    slice_counts = np.bincount(slice_idx[in_range], minlength=n_slices)

    r_eff = np.where(hit, np.minimum(r_max, r_ideal[None, :]), r_ideal[None, :])
    measured = 0.5 * np.sum(r_eff ** 2, axis=1) * d_theta
    deficits = np.maximum(ideal_area - measured, 0.0)

    rows: list[SliceRow] = []
    total = 0.0
    empty = 0
    for k in range(n_slices):
        z_lo = z0 + k * slice_h
        z_hi = min(z_lo + slice_h, z1)
        thickness = max(z_hi - z_lo, 0.0)
        n_pts = int(slice_counts[k])
        if n_pts == 0:
            empty += 1
            rows.append(SliceRow(z_lo, z_hi, ideal_area, ideal_area, 0.0, 0, True))
            continue
        rows.append(SliceRow(z_lo, z_hi, ideal_area, float(measured[k]),
                             float(deficits[k]), n_pts, False))
        total += float(deficits[k]) * thickness

    return SpallReport(rows, total, slice_h, n_bins, prism.half_extents, empty)
