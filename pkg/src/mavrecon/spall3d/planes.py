"""Plane fitting: classic 3-point RANSAC with a least-squares refit.

The consensus set of the best sample plane is refit by taking the smallest
eigenvector of the inlier covariance, which minimizes orthogonal RMS
distance, so the refit residual never exceeds the sample plane's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import Cloud

_CHUNK = 64  # candidate planes scored per vectorized pass


@dataclass
class Plane:
    normal: np.ndarray   # unit vector
    d: float             # n . p = d
    inliers: np.ndarray  # indices into the input cloud
    rms: float

    def distances(self, points: np.ndarray) -> np.ndarray:
        return np.abs(points @ self.normal - self.d)


def _canonical_sign(normal: np.ndarray, d: float) -> tuple[np.ndarray, float]:
    pivot = int(np.argmax(np.abs(normal)))
    if normal[pivot] < 0:
        return -normal, -d
    return normal, d


def fit_plane_ransac(cloud: Cloud, threshold: float = 0.005, iters: int = 1000,
                     rng: np.random.Generator | None = None,
                     max_eval: int | None = None) -> Plane:
    """Best-consensus plane from `iters` random 3-point samples.

    `max_eval` caps the number of points scored during candidate selection
    (an evenly strided subsample); the winning consensus set and the refit
    always use the full cloud.
    """
    pts = cloud.points if isinstance(cloud, Cloud) else np.asarray(cloud)
    n = len(pts)
    if n < 3:
        raise ValueError(f"plane fit needs at least 3 points, got {n}")
    if rng is None:
        rng = np.random.default_rng(0)
    if max_eval is not None and n > max_eval:
        eval_pts = pts[:: (n + max_eval - 1) // max_eval]
    else:
        eval_pts = pts

    best_count = -1
    best_normal: np.ndarray | None = None
    best_d = 0.0
    done = 0
    while done < iters:
        m = min(_CHUNK, iters - done)
        done += m
        samples = rng.integers(0, n, size=(m, 3))
        p1 = pts[samples[:, 0]]
        p2 = pts[samples[:, 1]]
        p3 = pts[samples[:, 2]]
        normals = np.cross(p2 - p1, p3 - p1)
        norms = np.linalg.norm(normals, axis=1)
        valid = norms > 1e-12
        if not np.any(valid):
            continue
        normals = normals[valid] / norms[valid, None]
        ds = np.einsum("ij,ij->i", normals, p1[valid])
        dist = np.abs(eval_pts @ normals.T - ds[None, :])
        counts = (dist <= threshold).sum(axis=0)
        k = int(np.argmax(counts))
        if counts[k] > best_count:
            best_count = int(counts[k])
            best_normal = normals[k]
            best_d = float(ds[k])

    if best_normal is None:
        raise ValueError("all RANSAC samples were collinear")

    consensus = np.nonzero(np.abs(pts @ best_normal - best_d) <= threshold)[0]
    inlier_pts = pts[consensus]
    centroid = inlier_pts.mean(axis=0)
    cov = np.cov((inlier_pts - centroid).T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    normal = eigvecs[:, 0]
    normal, d = _canonical_sign(normal / np.linalg.norm(normal),
                                float(normal @ centroid))
    rms = float(np.sqrt(np.mean((inlier_pts @ normal - d) ** 2)))
    return Plane(normal, d, consensus, rms)
