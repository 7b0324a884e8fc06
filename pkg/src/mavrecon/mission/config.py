"""Mission configuration: one dataclass tree covering every subsystem knob.

The whole tree serializes to a plain dict that is echoed into the mission
report, and a report's echo reconstructs an identical configuration, so any
run is reproducible from its own output.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any

from ..detmetrics import DetectorNoise
from ..explore import ExploreParams
from ..planner.dwa import DwaParams
from ..planner.rrtstar import RrtParams
from ..slam.mapping import MappingParams
from ..slam.rbpf import SlamParams
from ..slam.scanmatch import ScanMatchParams
from ..worldsim.lidar import LidarParams
from ..worldsim.motion import OdomNoise
from ..worldsim.thermal import ThermalParams


@dataclass(frozen=True)
class MissionPolicy:
    tick_dt: float = 0.25
    time_budget: float = 1500.0          # flight-time budget, seconds
    capture_every: int = 5               # thermal capture cadence in ticks
    slam_linear_update: float = 0.4      # process a scan after this much motion
    slam_angular_update: float = 0.7
    robot_radius: float = 0.25           # collision test against ground truth
    lethal_radius: float = 0.32          # costmap lethal band
    inflation_radius: float = 0.7
    goal_tolerance: float = 0.3
    goal_carve_radius: float = 0.5       # unknown treated free near a frontier goal
    stuck_timeout: float = 12.0
    stuck_distance: float = 0.10
    frontier_recheck_ticks: int = 20
    frontier_blacklist_after: int = 3
    max_consecutive_plan_failures: int = 5
    min_frontier_size: int = 14  # clusters under ~0.7 m of boundary are sensor speckle
    min_unknown_region: int = 40  # unknown islands under 0.1 m^2 are wall blur, not rooms

    def __post_init__(self) -> None:
        if self.tick_dt <= 0:
            raise ValueError("tick_dt must be positive")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")


# nested dataclass types by field name, used to rebuild a config from a dict
_NESTED: dict[str, type] = {
    "lidar": LidarParams, "thermal": ThermalParams, "odom_noise": OdomNoise,
    "slam": SlamParams, "explore": ExploreParams, "rrt": RrtParams,
    "dwa": DwaParams, "detector": DetectorNoise, "policy": MissionPolicy,
    "motion_noise": OdomNoise, "mapping": MappingParams,
    "matching": ScanMatchParams,
}


def _to_plain(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _rebuild(cls: type, data: dict) -> Any:
    kwargs: dict[str, Any] = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        raw = data[f.name]
        if f.name in _NESTED and isinstance(raw, dict):
            kwargs[f.name] = _rebuild(_NESTED[f.name], raw)
        elif isinstance(raw, list):
            kwargs[f.name] = tuple(raw)
        else:
            kwargs[f.name] = raw
    return cls(**kwargs)


@dataclass
class MissionConfig:
    world_pgm: str = ""
    world_meta: str = ""
    seed: int = 0
    start: tuple[float, float, float] | None = None   # overrides world meta
    lidar: LidarParams = field(default_factory=lambda: LidarParams(
        range_noise_sigma=0.01, dropout_prob=0.005))
    thermal: ThermalParams = field(default_factory=ThermalParams)
    odom_noise: OdomNoise = field(default_factory=lambda: OdomNoise(
        0.02, 0.002, 0.01, 0.002))
    slam: SlamParams = field(default_factory=lambda: SlamParams(
        mapping=MappingParams(beam_stride=2)))
    explore: ExploreParams = field(default_factory=ExploreParams)
    rrt: RrtParams = field(default_factory=lambda: RrtParams(
        max_iters=1500, stop_after_connect=250, goal_tolerance=0.25))
    dwa: DwaParams = field(default_factory=DwaParams)
    detector: DetectorNoise = field(default_factory=DetectorNoise)
    policy: MissionPolicy = field(default_factory=MissionPolicy)
    column_clouds: dict[str, str] = field(default_factory=dict)
    spall_slice_h: float = 0.02
    spall_bins: int = 36

    def noiseless(self) -> "MissionConfig":
        cfg = dataclasses.replace(self)
        cfg.lidar = dataclasses.replace(self.lidar, range_noise_sigma=0.0,
                                        dropout_prob=0.0)
        cfg.odom_noise = OdomNoise()
        cfg.slam = dataclasses.replace(self.slam, motion_noise=OdomNoise())
        return cfg

    def to_dict(self) -> dict:
        return _to_plain(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MissionConfig":
        return _rebuild(cls, data)
