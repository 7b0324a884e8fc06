"""Downward thermal camera as a geometric ground-truth labeler.

The camera sees a ground rectangle under the vehicle whose size follows the
pinhole footprint 2*h*tan(fov/2) per axis at the configured flight height.
Survivors intersecting the footprint become ground-truth boxes in image
pixel coordinates; the native sensor raster is upscaled to the 640x640
frame used downstream, so both image axes span the full footprint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..detmetrics import BBox, BBoxSet
from ..geometry import Pose2D
from .world import World

IMAGE_SIZE = (640.0, 640.0)


@dataclass(frozen=True)
class ThermalParams:
    fov_x: float = math.radians(55.0)
    fov_y: float = math.radians(35.0)
    pixel_res: tuple[int, int] = (32, 24)

    def __post_init__(self) -> None:
        if not (0.0 < self.fov_x < math.pi and 0.0 < self.fov_y < math.pi):
            raise ValueError("fov must be in (0, pi)")
        if self.pixel_res[0] <= 0 or self.pixel_res[1] <= 0:
            raise ValueError("pixel_res must be positive")


def footprint_extent(tp: ThermalParams, flight_height: float) -> tuple[float, float]:
    """Ground footprint (along-heading, lateral) in meters."""
    return (2.0 * flight_height * math.tan(tp.fov_x / 2.0),
            2.0 * flight_height * math.tan(tp.fov_y / 2.0))


def thermal_capture(world: World, pose: Pose2D, tp: ThermalParams,
                    image_id: str = "capture") -> BBoxSet:
    """Ground-truth survivor boxes visible in the footprint under `pose`."""
    fx, fy = footprint_extent(tp, world.flight_height)
    half_x, half_y = fx / 2.0, fy / 2.0
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    boxes: list[BBox] = []
    for sv in world.survivors:
        ex, ey = sv.extent[0] / 2.0, sv.extent[1] / 2.0
        corners = [(sv.center[0] + dx, sv.center[1] + dy)
                   for dx in (-ex, ex) for dy in (-ey, ey)]
        # Survivor corners in the footprint frame (x along heading).
        local = [((px - pose.x) * c + (py - pose.y) * s,
                  -(px - pose.x) * s + (py - pose.y) * c) for px, py in corners]
        lx = [p[0] for p in local]
        ly = [p[1] for p in local]
        x0, x1 = max(min(lx), -half_x), min(max(lx), half_x)
        y0, y1 = max(min(ly), -half_y), min(max(ly), half_y)
        if x0 >= x1 or y0 >= y1:
            continue
        u0 = (x0 / fx + 0.5) * IMAGE_SIZE[0]
        u1 = (x1 / fx + 0.5) * IMAGE_SIZE[0]
        v0 = (y0 / fy + 0.5) * IMAGE_SIZE[1]
        v1 = (y1 / fy + 0.5) * IMAGE_SIZE[1]
        boxes.append(BBox(u0, v0, u1, v1, "human"))
    return BBoxSet(image_id, boxes)
