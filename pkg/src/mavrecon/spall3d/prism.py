"""Recover the undamaged rectangular prism of a column from its side planes.

Up to four near-vertical planes are fit-and-removed from the cloud; their
normals pair into two anti-parallel families that must be mutually
orthogonal. Because plane fits are dominated by the intact surface, the
pair offsets estimate the original faces even on a partially spalled
column. A near-horizontal plane tilted beyond tilt_tol triggers one
releveling pass (rotate the cloud so that plane's normal becomes +z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cloud import Cloud
from .planes import Plane, fit_plane_ransac


@dataclass(frozen=True)
class PrismParams:
    ransac_threshold: float = 0.005
    ransac_iters: int = 1000
    vertical_tol: float = math.radians(15.0)  # side-plane normals within this of horizontal
    pair_tol: float = math.radians(2.0)       # anti-parallel / orthogonal tolerance
    tilt_tol: float = math.radians(3.0)       # acceptable ground-plane tilt before releveling
    max_plane_fits: int = 6
    min_plane_points: int = 60
    ransac_max_eval: int = 60000              # selection-phase scoring subsample cap


@dataclass
class PrismModel:
    center: tuple[float, float]        # footprint center, leveled-frame xy
    half_extents: tuple[float, float]  # along the yaw axis and its perpendicular
    yaw: float
    z_range: tuple[float, float]
    side_planes: list[Plane] = field(default_factory=list)
    ground_plane: Plane | None = None
    level_rotation: np.ndarray | None = None  # applied to inputs before footprint math

    @property
    def footprint_area(self) -> float:
        return 4.0 * self.half_extents[0] * self.half_extents[1]

    @property
    def height(self) -> float:
        return self.z_range[1] - self.z_range[0]

    def rectangle_radius(self, angles: np.ndarray) -> np.ndarray:
        """Distance from footprint center to the rectangle boundary per angle
        (angles measured in the footprint frame)."""
        a, b = self.half_extents
        c = np.abs(np.cos(angles))
        s = np.abs(np.sin(angles))
        with np.errstate(divide="ignore"):
            rx = np.where(c > 1e-12, a / c, np.inf)
            ry = np.where(s > 1e-12, b / s, np.inf)
        return np.minimum(rx, ry)

    def to_footprint_frame(self, points: np.ndarray) -> np.ndarray:
        """World points -> (u, v, z) with u along the yaw axis from the center."""
        if self.level_rotation is not None:
            points = points @ self.level_rotation.T
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        dx = points[:, 0] - self.center[0]
        dy = points[:, 1] - self.center[1]
        return np.column_stack((c * dx + s * dy, -s * dx + c * dy, points[:, 2]))


def _rotation_to_z(normal: np.ndarray) -> np.ndarray:
    """Rotation matrix taking `normal` to +z."""
    n = normal / np.linalg.norm(normal)
    if n[2] < 0:
        n = -n
    v = np.cross(n, [0.0, 0.0, 1.0])
    s = np.linalg.norm(v)
    c = float(n[2])
    if s < 1e-12:
        return np.eye(3)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx * ((1 - c) / s ** 2)


def _collect_planes(pts: np.ndarray, params: PrismParams,
                    rng: np.random.Generator) -> tuple[list[Plane], list[Plane]]:
    vertical: list[Plane] = []
    horizontal: list[Plane] = []
    remaining = pts
    index_map = np.arange(len(pts))
    sin_tol = math.sin(params.vertical_tol)
    for _ in range(params.max_plane_fits):
        if len(vertical) >= 4 or len(remaining) < params.min_plane_points:
            break
        plane = fit_plane_ransac(Cloud(remaining), params.ransac_threshold,
                                 params.ransac_iters, rng,
                                 max_eval=params.ransac_max_eval)
        if len(plane.inliers) < params.min_plane_points:
            break
        global_plane = Plane(plane.normal, plane.d, index_map[plane.inliers], plane.rms)
        if abs(plane.normal[2]) < sin_tol:
            vertical.append(global_plane)
        else:
            horizontal.append(global_plane)
        keep = np.ones(len(remaining), dtype=bool)
        keep[plane.inliers] = False
        remaining = remaining[keep]
        index_map = index_map[keep]
    return vertical, horizontal


def _axis_angle(direction: np.ndarray) -> float:
    """Direction of a horizontal unit vector as an axis angle in [0, pi)."""
    a = math.atan2(direction[1], direction[0])
    return a % math.pi


def _column_axis(planes: list[Plane]) -> np.ndarray | None:
    """Common axis implied by the side planes: the direction most orthogonal
    to every side normal (smallest eigenvector of the normal scatter)."""
    if len(planes) < 2:
        return None
    m = np.zeros((3, 3))
    for p in planes:
        m += len(p.inliers) * np.outer(p.normal, p.normal)
    eigvals, eigvecs = np.linalg.eigh(m)
    axis = eigvecs[:, 0]
    return axis if axis[2] >= 0 else -axis


def segment_prism(cloud: Cloud, params: PrismParams = PrismParams(),
                  rng: np.random.Generator | None = None) -> PrismModel:
    if rng is None:
        rng = np.random.default_rng(0)
    pts = cloud.points
    ground: Plane | None = None
    level_rot: np.ndarray | None = None

    vertical, horizontal = _collect_planes(pts, params, rng)

    # Relevel once if the implied column axis (or a dominant near-horizontal
    # plane, when side planes are scarce) tilts beyond tolerance.
    axis = _column_axis(vertical)
    tilt_source: np.ndarray | None = None
    if axis is not None:
        tilt = math.acos(min(abs(float(axis[2])), 1.0))
        if tilt > params.tilt_tol:
            tilt_source = axis
    if tilt_source is None and horizontal:
        g = max(horizontal, key=lambda p: len(p.inliers))
        tilt = math.acos(min(abs(float(g.normal[2])), 1.0))
        if tilt > params.tilt_tol:
            tilt_source = np.asarray(g.normal)
    if tilt_source is not None:
        level_rot = _rotation_to_z(tilt_source)
        pts = pts @ level_rot.T
        vertical, horizontal = _collect_planes(pts, params, rng)
    if horizontal:
        ground = max(horizontal, key=lambda p: len(p.inliers))

    if len(vertical) < 4:
        raise ValueError(
            f"found {len(vertical)} vertical side planes, need 4")

    # Split the four planes into two anti-parallel families.
    dirs = []
    for p in vertical:
        h = p.normal[:2] / np.linalg.norm(p.normal[:2])
        dirs.append(h)
    cos_pair = math.cos(params.pair_tol)
    sin_pair = math.sin(params.pair_tol)
    partitions = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
    chosen = None
    for pa, pb in partitions:
        same_a = abs(float(dirs[pa[0]] @ dirs[pa[1]])) >= cos_pair
        same_b = abs(float(dirs[pb[0]] @ dirs[pb[1]])) >= cos_pair
        ortho = all(abs(float(dirs[i] @ dirs[j])) <= sin_pair
                    for i in pa for j in pb)
        if same_a and same_b and ortho:
            chosen = (pa, pb)
            break
    if chosen is None:
        raise ValueError("side planes do not pair into an orthogonal rectangle")
    pair_a, pair_b = chosen

    # Joint yaw from both families (axis angles live mod pi).
    ang_a = _axis_angle(dirs[pair_a[0]])
    ang_b = (_axis_angle(dirs[pair_b[0]]) - math.pi / 2.0) % math.pi
    # circular mean of the doubled angles
    za = np.exp(2j * ang_a) + np.exp(2j * ang_b)
    yaw_axis = float(np.angle(za) / 2.0) % math.pi
    u = np.array([math.cos(yaw_axis), math.sin(yaw_axis)])
    v = np.array([-u[1], u[0]])

    def family_offsets(pair, axis) -> tuple[float, float]:
        # Project each face's inlier centroid onto the family axis. The
        # centroid lies on the plane, so this stays accurate regardless of
        # how far the column sits from the coordinate origin (plane offsets
        # d amplify small normal errors by that lever arm).
        offs = []
        for i in pair:
            centroid = pts[vertical[i].inliers].mean(axis=0)
            offs.append(float(centroid[0] * axis[0] + centroid[1] * axis[1]))
        return min(offs), max(offs)

    a_lo, a_hi = family_offsets(pair_a, u)
    b_lo, b_hi = family_offsets(pair_b, v)
    half_a = (a_hi - a_lo) / 2.0
    half_b = (b_hi - b_lo) / 2.0
    if half_a <= 0 or half_b <= 0:
        raise ValueError("degenerate footprint: coincident side planes")
    center_u = (a_hi + a_lo) / 2.0
    center_v = (b_hi + b_lo) / 2.0
    center = center_u * u + center_v * v

    side_idx = np.concatenate([vertical[i].inliers for i in (*pair_a, *pair_b)])
    z_vals = pts[side_idx, 2]
    model = PrismModel((float(center[0]), float(center[1])),
                       (float(half_a), float(half_b)), yaw_axis,
                       (float(z_vals.min()), float(z_vals.max())),
                       [vertical[i] for i in (*pair_a, *pair_b)], ground,
                       level_rot)
    return model
