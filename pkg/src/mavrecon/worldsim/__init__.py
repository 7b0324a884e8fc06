"""Synthetic ground-truth environment: world loading, vehicle kinematics with
odometry noise, raycast LiDAR, and geometric thermal-footprint capture."""

from .world import ColumnPlacement, Survivor, World, load_world, save_world
from .lidar import LidarParams, Scan, raycast, scans_to_jsonl, scans_from_jsonl
from .motion import OdomNoise, step, decompose_motion, sample_motion
from .thermal import ThermalParams, thermal_capture, footprint_extent

__all__ = [
    "World", "Survivor", "ColumnPlacement", "load_world", "save_world",
    "LidarParams", "Scan", "raycast", "scans_to_jsonl", "scans_from_jsonl",
    "OdomNoise", "step", "decompose_motion", "sample_motion",
    "ThermalParams", "thermal_capture", "footprint_extent",
]
