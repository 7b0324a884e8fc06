"""Mission report: the lossless end-of-run record.

Maps embed as base64 float32 log-odds so the report round-trips exactly.
Canonical JSON output (sorted keys, compact separators, wall-clock timing
dropped) is byte-identical across reruns of the same seed and config.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..grid import OccupancyGrid


def grid_to_dict(grid: OccupancyGrid) -> dict:
    return {
        "width": grid.width,
        "height": grid.height,
        "resolution": grid.resolution,
        "origin": list(grid.origin),
        "l_min": grid.l_min,
        "l_max": grid.l_max,
        "logodds_b64": base64.b64encode(
            np.ascontiguousarray(grid.logodds, dtype="<f4").tobytes()).decode("ascii"),
    }


def grid_from_dict(data: dict) -> OccupancyGrid:
    raw = base64.b64decode(data["logodds_b64"])
    logodds = np.frombuffer(raw, dtype="<f4").reshape(data["height"], data["width"])
    return OccupancyGrid(data["resolution"], tuple(data["origin"]),
                         logodds.copy(), data["l_min"], data["l_max"])


@dataclass
class MissionReport:
    seed: int
    config: dict
    terminated_by: str
    trajectory: list[dict] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    detections: list[dict] = field(default_factory=list)
    spall: list[dict] = field(default_factory=list)
    coverage: float = 0.0
    map_agreement: float = 0.0
    map_agreement_cells: int = 0
    final_map: dict = field(default_factory=dict)
    ticks: int = 0
    sim_time: float = 0.0
    wall_time: float = 0.0
    collision_events: int = 0
    replan_count: int = 0
    slam_updates: int = 0

    def to_dict(self, canonical: bool = False) -> dict:
        out = {
            "seed": self.seed,
            "config": self.config,
            "terminated_by": self.terminated_by,
            "trajectory": self.trajectory,
            "events": self.events,
            "detections": self.detections,
            "spall": self.spall,
            "coverage": self.coverage,
            "map_agreement": self.map_agreement,
            "map_agreement_cells": self.map_agreement_cells,
            "final_map": self.final_map,
            "ticks": self.ticks,
            "sim_time": self.sim_time,
            "collision_events": self.collision_events,
            "replan_count": self.replan_count,
            "slam_updates": self.slam_updates,
        }
        if not canonical:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, canonical: bool = False) -> str:
        if canonical:
            return json.dumps(self.to_dict(canonical=True), sort_keys=True,
                              separators=(",", ":"))
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: str | Path, canonical: bool = False) -> None:
        Path(path).write_text(self.to_json(canonical=canonical) + "\n")

    @classmethod
    def from_json(cls, source: str | Path) -> "MissionReport":
        if isinstance(source, Path) or (isinstance(source, str)
                                        and not source.lstrip().startswith("{")):
            text = Path(source).read_text()
        else:
            text = str(source)
        data = json.loads(text)
        return cls(
            seed=data["seed"], config=data["config"],
            terminated_by=data["terminated_by"],
            trajectory=data.get("trajectory", []),
            events=data.get("events", []),
            detections=data.get("detections", []),
            spall=data.get("spall", []),
            coverage=data.get("coverage", 0.0),
            map_agreement=data.get("map_agreement", 0.0),
            map_agreement_cells=data.get("map_agreement_cells", 0),
            final_map=data.get("final_map", {}),
            ticks=data.get("ticks", 0),
            sim_time=data.get("sim_time", 0.0),
            wall_time=data.get("wall_time", 0.0),
            collision_events=data.get("collision_events", 0),
            replan_count=data.get("replan_count", 0),
            slam_updates=data.get("slam_updates", 0),
        )

    def save_trajectory_csv(self, path: str | Path) -> None:
        lines = ["tick,sim_time,true_x,true_y,true_theta,est_x,est_y,est_theta"]
        for row in self.trajectory:
            t = row["true"]
            e = row["est"]
            lines.append(f'{row["tick"]},{row["t"]:.3f},'
                         f"{t[0]:.6f},{t[1]:.6f},{t[2]:.6f},"
                         f"{e[0]:.6f},{e[1]:.6f},{e[2]:.6f}")
        Path(path).write_text("\n".join(lines) + "\n")
