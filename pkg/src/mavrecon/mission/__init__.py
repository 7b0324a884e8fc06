"""Closed-loop mission orchestrator: sense -> SLAM -> frontier select ->
plan -> DWA-follow -> capture, until no frontiers remain."""

from .config import MissionConfig, MissionPolicy
from .report import MissionReport, grid_to_dict, grid_from_dict
from .loop import Mission, run_mission

__all__ = ["MissionConfig", "MissionPolicy", "MissionReport",
           "grid_to_dict", "grid_from_dict", "Mission", "run_mission"]
