import heapq
import math

import numpy as np
import pytest

from mavrecon import rng as rng_mod
from mavrecon.explore import (ExploreParams, choose_goal, find_frontiers,
                              path_cost_field)
from mavrecon.geometry import Pose2D
from mavrecon.grid import OccupancyGrid
from mavrecon.planner import CostmapParams, inflate


def grid_from_classes(rows):
    """Build a grid from strings: '.' free, '#' occupied, '?' unknown."""
    h, w = len(rows), len(rows[0])
    g = OccupancyGrid.empty(w, h, 0.1)
    for r, row in enumerate(rows):
        for c, ch in enumerate(row):
            g.logodds[r, c] = {"#": 5.0, ".": -5.0, "?": 0.0}[ch]
    return g


def open_costmap(grid, lethal_radius=0.0, unknown_lethal=False):
    return inflate(grid, lethal_radius,
                   CostmapParams(lethal_radius=lethal_radius,
                                 inflation_radius=lethal_radius,
                                 unknown_is_lethal=unknown_lethal))


def test_no_frontiers_in_fully_known_free_grid():
    g = grid_from_classes(["....", "....", "...."])
    assert find_frontiers(g, 1) == []


def test_no_frontiers_in_fully_unknown_grid():
    g = grid_from_classes(["????", "????"])
    assert find_frontiers(g, 1) == []


def test_half_free_half_unknown_single_frontier():
    rows = ["." * 5 + "?" * 5] * 10
    g = grid_from_classes(rows)
    fronts = find_frontiers(g, min_size=1)
    assert len(fronts) == 1
    f = fronts[0]
    assert f.size == 10
    assert set(map(tuple, f.cells.tolist())) == {(r, 4) for r in range(10)}


def test_min_size_filters_small_clusters():
    rows = ["....?....."] + ["..........."[:10]] * 8 + ["....?....."]
    # two single-cell unknowns produce small frontier rings
    g = grid_from_classes(rows)
    assert find_frontiers(g, min_size=20) == []
    assert len(find_frontiers(g, min_size=1)) >= 1


def test_frontiers_sorted_by_size_descending():
    rows = [
        "??........",
        "..........",
        "..........",
        "......????",
        "......????",
    ]
    g = grid_from_classes(rows)
    fronts = find_frontiers(g, min_size=1)
    sizes = [f.size for f in fronts]
    assert sizes == sorted(sizes, reverse=True)


def test_frontier_invariant_cells_free_and_touch_unknown():
    rng = rng_mod.stream(31)
    from mavrecon.grid import FREE, UNKNOWN
    for _ in range(20):
        g = OccupancyGrid.empty(20, 20, 0.1)
        g.logodds[:] = rng.choice([-5.0, 0.0, 5.0], size=(20, 20),
                                  p=[0.5, 0.35, 0.15])
        cls = g.classify()
        for f in find_frontiers(g, min_size=1):
            for (r, c) in f.cells:
                assert cls[r, c] == FREE
                neigh = cls[max(r - 1, 0):r + 2, max(c - 1, 0):c + 2]
                assert (neigh == UNKNOWN).any()


def test_relabeling_interior_unknown_does_not_change_frontiers():
    rows = ["." * 6 + "?" * 6] * 12
    g = grid_from_classes(rows)
    base = find_frontiers(g, min_size=1)
    # flip unknown cells far from the free boundary to occupied
    g2 = g.copy()
    g2.logodds[:, 9:] = 5.0
    again = find_frontiers(g2, min_size=1)
    assert len(base) == len(again) == 1
    assert np.array_equal(base[0].cells, again[0].cells)


# ----------------------------------------------------------------- choose_goal

def test_choose_goal_none_when_no_frontiers():
    g = grid_from_classes(["...."])
    cm = open_costmap(g)
    assert choose_goal([], Pose2D(0.1, 0.1, 0), cm) is None


def test_choose_goal_prefers_near_equal_size():
    rows = (["?" * 30] + ["." * 30] * 20 + ["?" * 30])
    g = grid_from_classes(rows)
    fronts = find_frontiers(g, min_size=1)
    assert len(fronts) == 2
    cm = open_costmap(g)
    pose = Pose2D(1.5, 0.35, 0)  # near the bottom frontier (row 1)
    goal, idx = choose_goal(fronts, pose, cm)
    assert abs(goal.y - pose.y) < 0.5


def _dijkstra_oracle(traversable, res, start):
    h, w = traversable.shape
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, (r, c) = heapq.heappop(heap)
        if d > dist.get((r, c), math.inf):
            continue
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                rr, cc = r + dr, c + dc
                if not (0 <= rr < h and 0 <= cc < w) or not traversable[rr, cc]:
                    continue
                nd = d + res * math.hypot(dr, dc)
                if nd < dist.get((rr, cc), math.inf):
                    dist[(rr, cc)] = nd
                    heapq.heappush(heap, (nd, (rr, cc)))
    return dist


def test_path_cost_field_matches_heap_dijkstra():
    rows = [
        "..........",
        ".########.",
        ".#......#.",
        ".#.####.#.",
        "...#..#...",
        ".#.#..#.#.",
        ".#.####.#.",
        ".#......#.",
        ".########.",
        "..........",
    ]
    g = grid_from_classes(rows)
    trav = g.classify() == 0
    field = path_cost_field(trav, 0.1, (0, 0))
    oracle = _dijkstra_oracle(trav, 0.1, (0, 0))
    for (r, c), d in oracle.items():
        assert field[r, c] == pytest.approx(d, abs=1e-9)
    unreachable = np.isfinite(field).sum()
    assert unreachable == len(oracle)


def test_choose_goal_uses_detour_cost_not_straight_line():
    # wall between the robot and a frontier on the right; the detour goes
    # around the bottom
    rows = []
    for r in range(20):
        if r < 16:
            rows.append("." * 9 + "#" + "." * 6 + "????")
        else:
            rows.append("." * 16 + "????")
    g = grid_from_classes(rows)
    fronts = find_frontiers(g, min_size=1)
    assert len(fronts) == 1
    cm = open_costmap(g)
    pose = Pose2D(0.45, 0.25, 0.0)
    goal, idx = choose_goal(fronts, pose, cm)
    # straight-line would be ~1.2 m; detour around the wall is much longer
    trav = g.classify() == 0
    r0, c0 = g.world_to_cell(pose.x, pose.y)
    oracle = _dijkstra_oracle(trav, 0.1, (int(r0), int(c0)))
    gr, gc = g.world_to_cell(goal.x, goal.y)
    assert oracle[(int(gr), int(gc))] > 1.2


def test_goal_is_traversable_and_reachable():
    rng = rng_mod.stream(37)
    for _ in range(10):
        g = OccupancyGrid.empty(30, 30, 0.1)
        g.logodds[:] = -5.0
        g.logodds[:, 20:] = 0.0
        blocks = rng.integers(2, 28, size=(6, 2))
        for r, c in blocks:
            g.logodds[r, c] = 5.0
        cm = inflate(g, 0.15, CostmapParams(lethal_radius=0.15,
                                            inflation_radius=0.3,
                                            unknown_is_lethal=True))
        fronts = find_frontiers(g, min_size=3)
        pose = Pose2D(0.5, 0.5, 0)
        picked = choose_goal(fronts, pose, cm)
        if picked is None:
            continue
        goal, _ = picked
        assert not cm.is_lethal_at(goal.x, goal.y)
        r0, c0 = cm.world_to_cell(pose.x, pose.y)
        field = path_cost_field(cm.traversable, 0.1, (int(r0), int(c0)))
        gr, gc = cm.world_to_cell(goal.x, goal.y)
        assert np.isfinite(field[int(gr), int(gc)])
