"""mavrecon: deterministic indoor inspection simulation and analysis toolkit."""

__version__ = "0.1.0"

from .geometry import Pose2D, Twist
from .grid import OccupancyGrid

__all__ = ["Pose2D", "Twist", "OccupancyGrid", "__version__"]
