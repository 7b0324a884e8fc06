"""Navigation stack: obstacle inflation, RRT* global planning, DWA local control."""

from .costmap import Costmap, CostmapParams, inflate
from .rrtstar import RrtParams, RrtResult, plan_rrt_star, validate_path, path_length
from .dwa import DwaParams, dwa_step, rollout

__all__ = [
    "Costmap", "CostmapParams", "inflate",
    "RrtParams", "RrtResult", "plan_rrt_star", "validate_path", "path_length",
    "DwaParams", "dwa_step", "rollout",
]
