"""Point cloud container, ASCII PLY / XYZ I/O, and preprocessing.

Preprocessing is a voxel-grid downsample (centroid per voxel) followed by
statistical outlier removal: points whose mean k-NN distance exceeds the
global mean by more than sigma_mult standard deviations are dropped. Both
stages are deterministic; voxel output is ordered by voxel index.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree


@dataclass
class Cloud:
    points: np.ndarray
    intensity: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("cloud contains non-finite coordinates")
        if self.intensity is not None:
            self.intensity = np.asarray(self.intensity, dtype=np.float64)
            if self.intensity.shape[0] != self.points.shape[0]:
                raise ValueError("intensity length must match point count")

    def __len__(self) -> int:
        return self.points.shape[0]


def load_xyz(path: str | Path) -> Cloud:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) < 3:
            raise ValueError(f"XYZ line needs 3 coordinates: {line!r}")
        rows.append([float(parts[0]), float(parts[1]), float(parts[2])])
    if not rows:
        raise ValueError(f"no points in {path}")
    return Cloud(np.array(rows))


def load_ply(path: str | Path) -> Cloud:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ValueError(f"{path} is not a PLY file")
    n_vertex = None
    props: list[str] = []
    body_at = None
    in_vertex = False
    for i, line in enumerate(lines[1:], start=1):
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format":
            if tok[1] != "ascii":
                raise ValueError("only ascii PLY is supported")
        elif tok[0] == "element":
            in_vertex = tok[1] == "vertex"
            if in_vertex:
                n_vertex = int(tok[2])
        elif tok[0] == "property" and in_vertex:
            props.append(tok[-1])
        elif tok[0] == "end_header":
            body_at = i + 1
            break
    if n_vertex is None or body_at is None:
        raise ValueError(f"malformed PLY header in {path}")
    for axis in ("x", "y", "z"):
        if axis not in props:
            raise ValueError(f"PLY vertex element lacks property {axis}")
    cols = {p: j for j, p in enumerate(props)}
    data = np.array([[float(v) for v in lines[body_at + r].split()[:len(props)]]
                     for r in range(n_vertex)])
    pts = data[:, [cols["x"], cols["y"], cols["z"]]]
    intensity = data[:, cols["intensity"]] if "intensity" in cols else None
    return Cloud(pts, intensity)


def load_cloud(path: str | Path) -> Cloud:
    path = Path(path)
    if path.suffix.lower() == ".ply":
        return load_ply(path)
    return load_xyz(path)


def save_ply(cloud: Cloud, path: str | Path) -> None:
    n = len(cloud)
    header = ["ply", "format ascii 1.0", f"element vertex {n}",
              "property float x", "property float y", "property float z"]
    if cloud.intensity is not None:
        header.append("property float intensity")
    header.append("end_header")
    with open(path, "w") as f:
        f.write("\n".join(header) + "\n")
        for i in range(n):
            row = f"{cloud.points[i, 0]:.6f} {cloud.points[i, 1]:.6f} {cloud.points[i, 2]:.6f}"
            if cloud.intensity is not None:
                row += f" {cloud.intensity[i]:.6f}"
            f.write(row + "\n")


def voxel_downsample(cloud: Cloud, voxel: float) -> Cloud:
    if voxel <= 0:
        raise ValueError("voxel size must be positive")
    pts = cloud.points
    lo = pts.min(axis=0)
    idx = np.floor((pts - lo) / voxel).astype(np.int64)
    spans = idx.max(axis=0) + 1
    flat = (idx[:, 0] * spans[1] + idx[:, 1]) * spans[2] + idx[:, 2]
    uniq, inverse, counts = np.unique(flat, return_inverse=True, return_counts=True)
    sums = np.zeros((uniq.size, 3))
    for axis in range(3):
        sums[:, axis] = np.bincount(inverse, weights=pts[:, axis], minlength=uniq.size)
    return Cloud(sums / counts[:, None])


def remove_outliers(cloud: Cloud, k: int, sigma_mult: float) -> Cloud:
    if k < 1:
        raise ValueError("k must be >= 1")
    pts = cloud.points
    if len(pts) <= k:
        return Cloud(pts.copy())
    tree = cKDTree(pts)
    dist, _ = tree.query(pts, k=k + 1)
    mean_knn = dist[:, 1:].mean(axis=1)
    mu = mean_knn.mean()
    sd = mean_knn.std()
    keep = mean_knn <= mu + sigma_mult * sd
    return Cloud(pts[keep])


def preprocess(cloud: Cloud, voxel: float = 0.005,
               outlier: tuple[int, float] = (8, 2.0)) -> Cloud:
    """Downsample then drop statistical outliers; errors if nothing survives."""
    out = voxel_downsample(cloud, voxel)
    out = remove_outliers(out, outlier[0], outlier[1])
    if len(out) == 0:
        raise ValueError("preprocessing removed every point; relax the parameters")
    return out
