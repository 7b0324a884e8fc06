"""RRT* global planner on a costmap.

Uniform sampling over the map extent with goal bias, steering capped at
eta, choose-parent and rewire within the shrinking near radius
r(n) = min(gamma * sqrt(log n / n), eta). Segments are collision-checked by
sampling at resolution / 4 -- the same step the path revalidation uses, so
a returned path always revalidates clean. After the iteration budget the
minimum-cost node within goal tolerance wins; greedy shortcutting smooths
the returned polyline by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .costmap import Costmap


@dataclass(frozen=True)
class RrtParams:
    max_iters: int = 5000
    eta: float = 0.5
    goal_bias: float = 0.05
    goal_tolerance: float = 0.2
    gamma: float | None = None       # default derived from free area
    smooth: bool = True
    stop_after_connect: int | None = None  # extra iterations after first goal connection
    debug_rewires: bool = False      # record (iter, node, old_cost, new_cost) events


@dataclass
class RrtResult:
    success: bool
    path: np.ndarray | None          # (k, 2) polyline, start first
    cost: float
    iters: int
    n_nodes: int
    diagnostics: dict = field(default_factory=dict)


def path_length(path: np.ndarray) -> float:
    if path is None or len(path) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(path, axis=0), axis=1)))


def _segment_points(a: np.ndarray, b: np.ndarray, step: float) -> np.ndarray:
    dist = float(np.linalg.norm(b - a))
    n = max(int(math.ceil(dist / step)), 1)
    t = np.linspace(0.0, 1.0, n + 1)
    return a[None, :] + t[:, None] * (b - a)[None, :]


def segment_free(costmap: Costmap, a: np.ndarray, b: np.ndarray,
                 step: float | None = None) -> bool:
    step = costmap.resolution / 4.0 if step is None else step
    pts = _segment_points(a, b, step)
    return not bool(np.any(costmap.is_lethal_at(pts[:, 0], pts[:, 1])))


def validate_path(costmap: Costmap, path: np.ndarray,
                  step: float | None = None) -> bool:
    """Re-check a polyline against the lethal mask at resolution / 4."""
    if path is None or len(path) == 0:
        return False
    if len(path) == 1:
        return not costmap.is_lethal_at(path[0, 0], path[0, 1])
    for i in range(len(path) - 1):
        if not segment_free(costmap, path[i], path[i + 1], step):
            return False
    return True


def default_gamma(costmap: Costmap) -> float:
    return 2.0 * math.sqrt(1.5 * max(costmap.free_area(), 1e-9) / math.pi)


def _shortcut(costmap: Costmap, path: np.ndarray) -> np.ndarray:
    """Greedy shortcutting: from each waypoint jump to the furthest visible one."""
    out = [path[0]]
    i = 0
    while i < len(path) - 1:
        j = len(path) - 1
        while j > i + 1 and not segment_free(costmap, path[i], path[j]):
            j -= 1
        out.append(path[j])
        i = j
    return np.array(out)


def plan_rrt_star(costmap: Costmap, start: tuple[float, float],
                  goal: tuple[float, float], params: RrtParams,
                  rng: np.random.Generator) -> RrtResult:
    start_arr = np.array(start, dtype=float)
    goal_arr = np.array(goal, dtype=float)
    if costmap.is_lethal_at(start_arr[0], start_arr[1]):
        raise ValueError("start lies in a lethal cell")

    if float(np.linalg.norm(goal_arr - start_arr)) <= 1e-12:
        return RrtResult(True, start_arr[None, :], 0.0, 0, 1)

    # Uniform sampling over free space: pick a non-lethal cell, then a
    # uniform point inside it. Equivalent measure to rejection sampling the
    # map extent, but the hit rate does not collapse when free space is a
    # sliver of the map (early exploration).
    free_rows, free_cols = np.nonzero(~costmap.lethal)
    if free_rows.size == 0:
        return RrtResult(False, None, math.inf, 0, 1, {"reason": "no free space"})
    res = costmap.resolution
    gamma = params.gamma if params.gamma is not None else default_gamma(costmap)

    cap = params.max_iters + 1
    pts = np.empty((cap, 2), dtype=float)
    parent = np.full(cap, -1, dtype=np.int64)
    cost = np.zeros(cap, dtype=float)
    children: list[list[int]] = [[] for _ in range(cap)]
    pts[0] = start_arr
    n = 1

    goal_nodes: list[int] = []
    first_connect_iter: int | None = None
    iters_run = 0
    rewire_log: list[tuple[int, int, float, float]] = []

    for it in range(params.max_iters):
        iters_run = it + 1
        if rng.random() < params.goal_bias:
            sample = goal_arr.copy()
        else:
            pick = int(rng.integers(0, free_rows.size))
            offset = rng.random(2)
            sample = np.array([
                costmap.origin[0] + (free_cols[pick] + offset[0]) * res,
                costmap.origin[1] + (free_rows[pick] + offset[1]) * res,
            ])

        d2 = np.einsum("ij,ij->i", pts[:n] - sample, pts[:n] - sample)
        nearest = int(np.argmin(d2))
        dist = math.sqrt(d2[nearest])
        if dist <= 1e-12:
            continue
        if dist > params.eta:
            new_pt = pts[nearest] + (sample - pts[nearest]) * (params.eta / dist)
        else:
            new_pt = sample
        if costmap.is_lethal_at(new_pt[0], new_pt[1]):
            continue

        r_near = min(gamma * math.sqrt(math.log(n + 1) / (n + 1)), params.eta)
        d2_new = np.einsum("ij,ij->i", pts[:n] - new_pt, pts[:n] - new_pt)
        near = np.nonzero(d2_new <= r_near ** 2)[0]
        if nearest not in near:
            near = np.append(near, nearest)

        # choose parent: lowest cost-from-start through a collision-free segment
        best_parent = -1
        best_cost = math.inf
        order = near[np.argsort(cost[near] + np.sqrt(d2_new[near]), kind="stable")]
        for cand in order:
            c = cost[cand] + math.sqrt(d2_new[cand])
            if c >= best_cost:
                break
            if segment_free(costmap, pts[cand], new_pt):
                best_parent = int(cand)
                best_cost = c
                break
        if best_parent < 0:
            continue

        idx = n
        pts[idx] = new_pt
        parent[idx] = best_parent
        cost[idx] = best_cost
        children[best_parent].append(idx)
        n += 1

        # rewire neighbors through the new node when it shortens them
        for cand in near:
            cand = int(cand)
            if cand == best_parent:
                continue
            new_cost = best_cost + math.sqrt(d2_new[cand])
            if new_cost + 1e-12 < cost[cand] and segment_free(costmap, new_pt, pts[cand]):
                if params.debug_rewires:
                    rewire_log.append((it, cand, float(cost[cand]), float(new_cost)))
                delta = new_cost - cost[cand]
                children[int(parent[cand])].remove(cand)
                parent[cand] = idx
                children[idx].append(cand)
                # propagate the improvement through cand's subtree
                stack = [cand]
                while stack:
                    node = stack.pop()
                    cost[node] += delta
                    stack.extend(children[node])

        if float(np.linalg.norm(new_pt - goal_arr)) <= params.goal_tolerance:
            goal_nodes.append(idx)
            if first_connect_iter is None:
                first_connect_iter = it
        if (params.stop_after_connect is not None and first_connect_iter is not None
                and it - first_connect_iter >= params.stop_after_connect):
            break

    diagnostics: dict = {}
    if params.debug_rewires:
        diagnostics["rewires"] = rewire_log
    if not goal_nodes:
        diagnostics["reason"] = "no node within goal tolerance"
        return RrtResult(False, None, math.inf, iters_run, n, diagnostics)

    best_node = min(goal_nodes, key=lambda i: cost[i])
    chain = []
    node = best_node
    while node >= 0:
        chain.append(node)
        node = int(parent[node])
    path = pts[chain[::-1]].copy()
    if params.smooth and len(path) > 2:
        path = _shortcut(costmap, path)
    diagnostics["tree_cost"] = float(cost[best_node])
    diagnostics["goal_nodes"] = len(goal_nodes)
    return RrtResult(True, path, path_length(path), iters_run, n, diagnostics)
