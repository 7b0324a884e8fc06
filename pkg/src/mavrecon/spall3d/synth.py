"""Synthetic spalled-column generator with a brute-force volume oracle.

The column is a rectangular prism; carves (boxes or ellipsoids) subtract
material. Surface points are sampled uniformly on the four side faces,
points swallowed by a carve are dropped, the exposed carve surface inside
the prism is sampled at the same density, and isotropic Gaussian noise is
added last. Ground truth is the volume of prism-intersect-carves from fine
voxelization, independent of everything the estimator does.

Carves must break the side surface to be visible to a scanner; a fully
interior void is counted by the oracle but invisible to any estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cloud import Cloud


@dataclass(frozen=True)
class Carve:
    kind: str                       # "box" | "ellipsoid"
    center: tuple[float, float, float]
    size: tuple[float, float, float]  # box half-sizes or ellipsoid radii

    def __post_init__(self) -> None:
        if self.kind not in ("box", "ellipsoid"):
            raise ValueError(f"unknown carve kind {self.kind!r}")
        if min(self.size) <= 0:
            raise ValueError("carve size components must be positive")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        d = pts - np.asarray(self.center)
        if self.kind == "box":
            s = np.asarray(self.size)
            return np.all(np.abs(d) <= s, axis=1)
        r = np.asarray(self.size)
        return np.sum((d / r) ** 2, axis=1) <= 1.0

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center)
        s = np.asarray(self.size)
        return c - s, c + s

    def surface_points(self, density: float, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "box":
            sx, sy, sz = self.size
            faces = [
                ((1, 0, 0), sx, (sy, sz)), ((-1, 0, 0), sx, (sy, sz)),
                ((0, 1, 0), sy, (sx, sz)), ((0, -1, 0), sy, (sx, sz)),
                ((0, 0, 1), sz, (sx, sy)), ((0, 0, -1), sz, (sx, sy)),
            ]
            out = []
            for normal, offset, (ha, hb) in faces:
                area = 4.0 * ha * hb
                n_pts = max(int(round(area * density)), 1)
                uv = rng.uniform(-1.0, 1.0, (n_pts, 2)) * [ha, hb]
                axis = int(np.argmax(np.abs(normal)))
                pts = np.zeros((n_pts, 3))
                pts[:, axis] = offset * normal[axis]
                other = [i for i in range(3) if i != axis]
                pts[:, other[0]] = uv[:, 0]
                pts[:, other[1]] = uv[:, 1]
                out.append(pts)
            return np.vstack(out) + np.asarray(self.center)
        # ellipsoid: direction sampling with margin; good coverage, not
        # perfectly uniform, which the estimator never relies on
        rx, ry, rz = self.size
        area_approx = 4.0 * math.pi * ((rx * ry) ** 1.6 + (rx * rz) ** 1.6
                                       + (ry * rz) ** 1.6) ** (1 / 1.6) / 3 ** (1 / 1.6)
        n_pts = max(int(round(1.5 * area_approx * density)), 8)
        dirs = rng.normal(0.0, 1.0, (n_pts, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return dirs * np.asarray(self.size) + np.asarray(self.center)


@dataclass(frozen=True)
class ColumnSpec:
    half_extents: tuple[float, float] = (0.15, 0.15)
    height: float = 1.2
    carves: tuple[Carve, ...] = ()
    density: float = 10000.0        # points per square meter (1 pt/cm^2)
    noise_sigma: float = 0.0
    yaw: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)


def _prism_contains(pts: np.ndarray, spec: ColumnSpec) -> np.ndarray:
    a, b = spec.half_extents
    return ((np.abs(pts[:, 0]) <= a) & (np.abs(pts[:, 1]) <= b)
            & (pts[:, 2] >= 0.0) & (pts[:, 2] <= spec.height))


def _carved(pts: np.ndarray, carves) -> np.ndarray:
    removed = np.zeros(len(pts), dtype=bool)
    for carve in carves:
        removed |= carve.contains(pts)
    return removed


def sample_column_cloud(spec: ColumnSpec, rng: np.random.Generator) -> Cloud:
    """Surface samples of the carved column in canonical frame, then posed."""
    a, b = spec.half_extents
    h = spec.height
    faces = [
        (np.array([a, 0, 0]), np.array([0, b, 0]), np.array([0, 0, h / 2])),
        (np.array([-a, 0, 0]), np.array([0, b, 0]), np.array([0, 0, h / 2])),
        (np.array([0, b, 0]), np.array([a, 0, 0]), np.array([0, 0, h / 2])),
        (np.array([0, -b, 0]), np.array([a, 0, 0]), np.array([0, 0, h / 2])),
    ]
    chunks = []
    for anchor, tang_u, tang_v in faces:
        area = 4.0 * np.linalg.norm(tang_u) * np.linalg.norm(tang_v)
        n_pts = max(int(round(area * spec.density)), 1)
        uv = rng.uniform(-1.0, 1.0, (n_pts, 2))
        pts = (anchor + np.array([0, 0, h / 2])
               + uv[:, 0:1] * tang_u + uv[:, 1:2] * tang_v)
        chunks.append(pts)
    surface = np.vstack(chunks)
    if spec.carves:
        surface = surface[~_carved(surface, spec.carves)]
        carve_chunks = []
        for i, carve in enumerate(spec.carves):
            cpts = carve.surface_points(spec.density, rng)
            keep = _prism_contains(cpts, spec)
            others = [c for j, c in enumerate(spec.carves) if j != i]
            if others:
                keep &= ~_carved(cpts, others)
            carve_chunks.append(cpts[keep])
        surface = np.vstack([surface] + carve_chunks)

    if spec.noise_sigma > 0:
        surface = surface + rng.normal(0.0, spec.noise_sigma, surface.shape)

    c, s = math.cos(spec.yaw), math.sin(spec.yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    posed = surface @ rot.T
    posed[:, 0] += spec.center[0]
    posed[:, 1] += spec.center[1]
    return Cloud(posed)


def voxel_carve_volume(spec: ColumnSpec, voxel: float = 0.001) -> float:
    """Brute-force volume of prism-intersect-carves by voxel center counting."""
    if not spec.carves:
        return 0.0
    a, b = spec.half_extents
    lo_p = np.array([-a, -b, 0.0])
    hi_p = np.array([a, b, spec.height])
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for carve in spec.carves:
        c_lo, c_hi = carve.bounds()
        lo = np.minimum(lo, c_lo)
        hi = np.maximum(hi, c_hi)
    lo = np.maximum(lo, lo_p)
    hi = np.minimum(hi, hi_p)
    if np.any(hi <= lo):
        return 0.0
    counts = np.maximum(np.round((hi - lo) / voxel).astype(int), 1)
    cell = (hi - lo) / counts
    cell_vol = float(np.prod(cell))
    xs = lo[0] + (np.arange(counts[0]) + 0.5) * cell[0]
    ys = lo[1] + (np.arange(counts[1]) + 0.5) * cell[1]
    total = 0
    # slab by z to bound memory
    z_chunk = max(int(2e7 // max(counts[0] * counts[1], 1)), 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    base = np.column_stack((gx.ravel(), gy.ravel()))
    for z_start in range(0, counts[2], z_chunk):
        zs = lo[2] + (np.arange(z_start, min(z_start + z_chunk, counts[2])) + 0.5) * cell[2]
        pts = np.empty((base.shape[0] * zs.size, 3))
        pts[:, :2] = np.repeat(base, zs.size, axis=0)
        pts[:, 2] = np.tile(zs, base.shape[0])
        inside = _carved(pts, spec.carves)
        total += int(inside.sum())
    return total * cell_vol


def gen_column(spec: ColumnSpec, rng: np.random.Generator,
               oracle_voxel: float = 0.001) -> tuple[Cloud, float]:
    """Sampled cloud plus oracle ground-truth carve volume (m^3)."""
    cloud = sample_column_cloud(spec, rng)
    return cloud, voxel_carve_volume(spec, oracle_voxel)
