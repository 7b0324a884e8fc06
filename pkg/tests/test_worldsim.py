import math

import numpy as np
import pytest
from scipy import ndimage

from mavrecon import rng as rng_mod
from mavrecon.geometry import Pose2D, Twist
from mavrecon.grid import OccupancyGrid
from mavrecon.worldsim import (LidarParams, OdomNoise, ThermalParams, World,
                               footprint_extent, load_world, raycast,
                               save_world, step, thermal_capture)
from mavrecon.worldsim.motion import integrate_twist
from mavrecon.worldgen import office_world


def boxed_world(n=100, res=0.1, extra_walls=()):
    occ = np.zeros((n, n), dtype=bool)
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = True
    for (r0, r1, c0, c1) in extra_walls:
        occ[r0:r1, c0:c1] = True
    return World(OccupancyGrid.from_occupancy(occ, res))


# ---------------------------------------------------------------- load_world

def test_load_world_all_white_is_free(tmp_path):
    pgm = tmp_path / "w.pgm"
    pgm.write_bytes(b"P5\n10 10\n255\n" + b"\xff" * 100)
    meta = tmp_path / "w.meta"
    meta.write_text("resolution = 0.1\n")
    world = load_world(pgm, meta)
    assert world.gt_grid.extent == (1.0, 1.0)
    assert not world.occupied.any()


def test_load_world_all_black_is_occupied(tmp_path):
    pgm = tmp_path / "b.pgm"
    pgm.write_bytes(b"P5\n10 10\n255\n" + b"\x00" * 100)
    meta = tmp_path / "b.meta"
    meta.write_text("resolution = 0.1\n")
    world = load_world(pgm, meta)
    assert world.occupied.all()


def test_load_world_intermediate_gray_is_occupied(tmp_path):
    pgm = tmp_path / "g.pgm"
    pgm.write_bytes(b"P5\n4 1\n255\n" + bytes([255, 130, 210, 0]))
    meta = tmp_path / "g.meta"
    meta.write_text("resolution = 0.1\n")
    world = load_world(pgm, meta)
    # occ = (255 - pixel)/255: 0.0, 0.49, 0.176, 1.0 -> free iff occ <= 0.196
    assert list(world.occupied[0]) == [False, True, False, True]


def test_office_fixture_rooms_connected(tmp_path):
    world = office_world()
    free = ~world.occupied
    labels, n = ndimage.label(free, structure=np.ones((3, 3), dtype=int))
    sizes = np.bincount(labels.ravel())[1:]
    # a single connected free component: every room is reachable via a door
    assert (sizes > 50).sum() == 1
    # and round-trips through the PGM + metadata files
    save_world(world, tmp_path / "o.pgm", tmp_path / "o.meta")
    again = load_world(tmp_path / "o.pgm", tmp_path / "o.meta")
    assert np.array_equal(again.occupied, world.occupied)
    assert again.start == world.start
    assert len(again.survivors) == len(world.survivors)
    assert len(again.columns) == len(world.columns)


def test_load_world_rejects_bad_meta(tmp_path):
    pgm = tmp_path / "w.pgm"
    pgm.write_bytes(b"P5\n4 4\n255\n" + b"\xff" * 16)
    meta = tmp_path / "w.meta"
    meta.write_text("origin_x = 0.0\n")
    with pytest.raises(ValueError):
        load_world(pgm, meta)  # resolution missing
    meta.write_text("resolution = -2\n")
    with pytest.raises(ValueError):
        load_world(pgm, meta)
    meta.write_text("resolution = 0.1\nsurvivor[0] = 99, 99, 0.5, 0.5\n")
    with pytest.raises(ValueError):
        load_world(pgm, meta)  # placement outside bounds


# ------------------------------------------------------------------- raycast

def test_raycast_open_world_no_return():
    # interior free everywhere, max_range shorter than the distance to walls
    world = boxed_world(n=200, res=0.1)
    lidar = LidarParams(n_beams=16, max_range=5.0)
    pose = Pose2D(10.0, 10.0, 0.3)
    scan = raycast(world, pose, lidar, rng_mod.stream(0))
    assert not scan.hits.any()
    assert np.all(scan.ranges == lidar.no_return)


def test_raycast_wall_straight_ahead():
    world = boxed_world(n=100, res=0.1, extra_walls=[(0, 100, 60, 61)])
    pose = Pose2D(3.0, 5.0, 0.0)  # wall cells start at x = 6.0
    lidar = LidarParams(n_beams=3, fov=math.radians(2), max_range=50.0)
    scan = raycast(world, pose, lidar, rng_mod.stream(0))
    assert scan.ranges[1] == pytest.approx(3.0, abs=0.05)


def test_raycast_deterministic():
    world = boxed_world()
    lidar = LidarParams(n_beams=64, range_noise_sigma=0.02, dropout_prob=0.05)
    pose = Pose2D(5.0, 5.0, 1.0)
    s1 = raycast(world, pose, lidar, rng_mod.stream(9, "lidar", 3))
    s2 = raycast(world, pose, lidar, rng_mod.stream(9, "lidar", 3))
    assert np.array_equal(s1.ranges, s2.ranges)


def test_raycast_pose_validation():
    world = boxed_world()
    lidar = LidarParams(n_beams=4)
    with pytest.raises(ValueError):
        raycast(world, Pose2D(0.05, 0.05, 0), lidar, rng_mod.stream(0))
    with pytest.raises(ValueError):
        raycast(world, Pose2D(-5, 5, 0), lidar, rng_mod.stream(0))


def _analytic_first_hit(pose, theta, rects, max_range):
    """Ray vs axis-aligned rectangles: smallest positive entry distance."""
    dx, dy = math.cos(theta), math.sin(theta)
    best = math.inf
    for (x0, y0, x1, y1) in rects:
        t_lo, t_hi = 0.0, max_range
        ok = True
        for p, d, lo, hi in ((pose.x, dx, x0, x1), (pose.y, dy, y0, y1)):
            if abs(d) < 1e-15:
                if not (lo <= p <= hi):
                    ok = False
                    break
            else:
                ta, tb = (lo - p) / d, (hi - p) / d
                if ta > tb:
                    ta, tb = tb, ta
                t_lo, t_hi = max(t_lo, ta), min(t_hi, tb)
                if t_lo > t_hi:
                    ok = False
                    break
        if ok and t_lo < best:
            best = t_lo
    return best


def test_raycast_matches_analytic_oracle():
    res = 0.1
    # wall rectangles aligned to cell boundaries so rasterization is exact
    rects_cells = [(0, 100, 60, 62), (20, 24, 10, 50), (70, 96, 30, 34)]
    extra = [(r0, r1, c0, c1) for (r0, r1, c0, c1) in rects_cells]
    world = boxed_world(n=100, res=res, extra_walls=extra)
    rect_bounds = [(c0 * res, r0 * res, c1 * res, r1 * res)
                   for (r0, r1, c0, c1) in rects_cells]
    rect_bounds += [(0, 0, 10, res), (0, 9.9, 10, 10), (0, 0, res, 10),
                    (9.9, 0, 10, 10)]
    lidar = LidarParams(n_beams=180, fov=math.radians(320), max_range=50.0)
    for pose in [Pose2D(3.0, 5.0, 0.2), Pose2D(1.0, 8.7, -2.0), Pose2D(8.0, 0.6, 2.8)]:
        scan = raycast(world, pose, lidar, rng_mod.stream(4))
        for angle, rng_val in zip(scan.angles, scan.ranges):
            expect = _analytic_first_hit(pose, pose.theta + angle, rect_bounds,
                                         lidar.max_range)
            if math.isinf(expect):
                assert rng_val > lidar.max_range
            else:
                assert rng_val == pytest.approx(expect, abs=res / 2)


# ---------------------------------------------------------------------- step

def test_step_straight_line_exact():
    pose, delta = step(Pose2D(0, 0, 0), Twist(1.0, 0.0), 1.0, OdomNoise(),
                       rng_mod.stream(0))
    assert pose.x == pytest.approx(1.0)
    assert pose.y == pytest.approx(0.0)
    assert delta.x == pytest.approx(1.0)


def test_step_pure_rotation():
    pose, delta = step(Pose2D(2, 3, 0), Twist(0.0, math.pi), 1.0, OdomNoise(),
                       rng_mod.stream(0))
    assert (pose.x, pose.y) == (2, 3)
    assert abs(pose.theta) == pytest.approx(math.pi)
    assert delta.theta == pytest.approx(math.pi)


def test_step_composition_property():
    cases = [(Twist(0.7, 0.0), 1e-9), (Twist(0.5, 0.8), 1e-6),
             (Twist(1.0, -2.2), 1e-6)]
    pose = Pose2D(0.3, -0.2, 0.6)
    for cmd, tol in cases:
        full = integrate_twist(pose, cmd, 1.0)
        half = integrate_twist(integrate_twist(pose, cmd, 0.5), cmd, 0.5)
        assert full.x == pytest.approx(half.x, abs=tol)
        assert full.y == pytest.approx(half.y, abs=tol)
        assert full.theta == pytest.approx(half.theta, abs=tol)


def test_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        step(Pose2D(), Twist(1, 0), 0.0, OdomNoise(), rng_mod.stream(0))


def test_odometry_noise_is_unbiased_forward():
    noise = OdomNoise(0.05, 0.01, 0.02, 0.01)
    rng = rng_mod.stream(123, "odo")
    xs = []
    for _ in range(10_000):
        _, delta = step(Pose2D(0, 0, 0), Twist(1.0, 0.0), 1.0, noise, rng)
        xs.append(delta.x)
    assert np.mean(xs) == pytest.approx(1.0, rel=0.01)


# -------------------------------------------------------------------- thermal

def test_thermal_footprint_size():
    tp = ThermalParams()
    fx, fy = footprint_extent(tp, 1.5)
    assert fx == pytest.approx(2 * 1.5 * math.tan(math.radians(27.5)), abs=1e-9)
    assert fy == pytest.approx(2 * 1.5 * math.tan(math.radians(17.5)), abs=1e-9)
    assert fx == pytest.approx(1.562, abs=1e-3)
    assert fy == pytest.approx(0.946, abs=1e-3)


def test_thermal_footprint_grows_with_height():
    tp = ThermalParams()
    areas = []
    for h in (0.5, 1.0, 1.5, 2.0, 3.0):
        fx, fy = footprint_extent(tp, h)
        areas.append(fx * fy)
    assert all(a < b for a, b in zip(areas, areas[1:]))


def _world_with_survivor(center, extent):
    occ = np.zeros((100, 100), dtype=bool)
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = True
    g = OccupancyGrid.from_occupancy(occ, 0.1)
    from mavrecon.worldsim import Survivor
    return World(g, survivors=[Survivor(center, extent, "s0")], flight_height=1.5)


def test_thermal_no_survivor_in_footprint():
    world = _world_with_survivor((8.0, 8.0), (0.5, 0.5))
    out = thermal_capture(world, Pose2D(2.0, 2.0, 0.0), ThermalParams())
    assert len(out.boxes) == 0


def test_thermal_centered_survivor_box_is_centered():
    world = _world_with_survivor((5.0, 5.0), (0.4, 0.3))
    out = thermal_capture(world, Pose2D(5.0, 5.0, 0.7), ThermalParams())
    assert len(out.boxes) == 1
    b = out.boxes[0]
    assert (b.x_min + b.x_max) / 2 == pytest.approx(320.0, abs=1e-6)
    assert (b.y_min + b.y_max) / 2 == pytest.approx(320.0, abs=1e-6)
    assert b.label == "human"
