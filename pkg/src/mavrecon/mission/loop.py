"""Closed-loop exploration mission.

Each tick applies the pending twist, senses, feeds SLAM (scans are
processed after enough motion accumulates, gmapping-style), and services
the EXPLORE -> PLAN -> NAVIGATE state machine. The run ends when no
reachable frontier remains, the time budget expires, planning fails
repeatedly, or the true pose collides with the world (which the controller
must prevent; a collision aborts the run and is recorded).

All randomness is drawn from streams keyed off the mission seed, so a rerun
with the same config and seed is bit-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import rng as rng_mod
from ..detmetrics import boxes_to_json, simulate_detector
from ..explore import ExploreParams, choose_goal, find_frontiers
from ..geometry import IDENTITY, STOP, Pose2D, Twist, wrap_angle
from ..grid import OccupancyGrid
from ..planner.costmap import Costmap, CostmapParams, inflate
from ..planner.dwa import dwa_step
from ..planner.rrtstar import plan_rrt_star
from ..slam.agreement import map_agreement
from ..slam.rbpf import SlamState, slam_init, slam_step
from ..spall3d import load_cloud, preprocess, segment_prism, spall_volume
from ..worldsim.lidar import raycast
from ..worldsim.motion import step as motion_step
from ..worldsim.thermal import thermal_capture
from ..worldsim.world import World, load_world
from .config import MissionConfig
from .report import MissionReport, grid_to_dict

EXPLORE, PLAN, NAVIGATE, SWEEP, DONE = \
    "EXPLORE", "PLAN", "NAVIGATE", "SWEEP", "DONE"


@dataclass
class _GoalInfo:
    pose: Pose2D
    key: tuple[int, int]          # quantized centroid cell for blacklist bookkeeping


class Mission:
    def __init__(self, config: MissionConfig, world: World | None = None):
        self.config = config
        self.world = world if world is not None else load_world(
            config.world_pgm, config.world_meta)
        if config.start is not None:
            self.true_pose = Pose2D(*config.start)
        elif self.world.start is not None:
            self.true_pose = self.world.start
        else:
            raise ValueError("no start pose in config or world metadata")
        if not self.world.is_free(self.true_pose.x, self.true_pose.y):
            raise ValueError("start pose is not in free space")

        g = self.world.gt_grid
        self.slam: SlamState = slam_init(
            self.true_pose, OccupancyGrid.empty(g.width, g.height, g.resolution,
                                                g.origin),
            config.seed, config.slam)
        self.reachable = self.world.reachable_free(self.true_pose)
        self.reachable_count = int(self.reachable.sum())
        self.ever_free = np.zeros_like(self.reachable)

        self.state = EXPLORE
        self.tick_count = 0
        self.sim_time = 0.0
        self.cmd = STOP
        self.vel = STOP
        self.pending_odom = IDENTITY
        self.moved_since_update = 0.0
        self.turned_since_update = 0.0
        self.goal: _GoalInfo | None = None
        self.path: np.ndarray | None = None
        self.costmap: Costmap | None = None
        self.map_version = -1
        self.costmap_version = -1
        self.events: list[dict] = []
        self.trajectory: list[dict] = []
        self.detections: list[dict] = []
        self.map_dirty = True
        self.slam_updates = 0
        self.replan_count = 0
        self.collision = False
        self.consecutive_plan_failures = 0
        self.goal_failures: dict[tuple[int, int], int] = {}
        self.blacklist: set[tuple[int, int]] = set()
        self.progress_log: list[tuple[float, float, float]] = []
        self.swept = 0.0
        self.sweep_bearing = 0.0
        self.sweep_settle = 0
        self.force_slam_update = False
        self.sweep_done_keys: dict[tuple[int, int], int] = {}
        self.terminated_by: str | None = None

        self._sense(initial=True)
        self._record_state()

    # ------------------------------------------------------------- helpers
    def _event(self, kind: str, **info) -> None:
        self.events.append({"tick": self.tick_count, "type": kind, **info})

    @property
    def best_map(self) -> OccupancyGrid:
        return self.slam.best.grid

    @property
    def est_pose(self) -> Pose2D:
        return self.slam.best.pose.compose(self.pending_odom)

    def _sense(self, initial: bool = False) -> None:
        scan = raycast(self.world, self.true_pose, self.config.lidar,
                       rng_mod.stream(self.config.seed, "lidar", self.tick_count))
        moved = self.moved_since_update
        turned = self.turned_since_update
        policy = self.config.policy
        if initial or self.force_slam_update \
                or moved >= policy.slam_linear_update \
                or turned >= policy.slam_angular_update:
            self.force_slam_update = False
            slam_step(self.slam, self.pending_odom, scan)
            self.pending_odom = IDENTITY
            self.moved_since_update = 0.0
            self.turned_since_update = 0.0
            self.slam_updates += 1
            self.map_dirty = True
            free = self.best_map.free_mask() & self.reachable
            self.ever_free |= free

    def _costmap_for_goal(self, goal: Pose2D | None) -> Costmap:
        params = CostmapParams(
            lethal_radius=self.config.policy.lethal_radius,
            inflation_radius=self.config.policy.inflation_radius,
            unknown_is_lethal=True)
        est = self.est_pose
        carves = [(est.x, est.y, self.config.policy.goal_carve_radius)]
        if goal is not None:
            carves.append((goal.x, goal.y, self.config.policy.goal_carve_radius))
        return inflate(self.best_map, self.config.policy.inflation_radius,
                       params, carve=carves)

    def _explore_costmap(self) -> Costmap:
        # Same traversability notion as planning (unknown is not passable),
        # so a frontier ranked reachable is actually plannable; the vehicle
        # footprint carve keeps the blind wedge from pinning the robot.
        params = CostmapParams(
            lethal_radius=self.config.policy.lethal_radius,
            inflation_radius=self.config.policy.inflation_radius,
            unknown_is_lethal=True)
        est = self.est_pose
        return inflate(self.best_map, self.config.policy.inflation_radius, params,
                       carve=[(est.x, est.y, self.config.policy.goal_carve_radius)])

    def _frontiers(self):
        fronts = find_frontiers(self.best_map, self.config.policy.min_frontier_size,
                                self.config.policy.min_unknown_region)
        if not self.blacklist:
            return fronts
        res = self.best_map.resolution
        keep = []
        for f in fronts:
            key = self._quantize(f.centroid)
            near_black = any(
                math.hypot((key[0] - b[0]), (key[1] - b[1])) * res <= 0.75
                for b in self.blacklist)
            if not near_black:
                keep.append(f)
        return keep

    def _quantize(self, xy: tuple[float, float]) -> tuple[int, int]:
        r, c = self.best_map.world_to_cell(xy[0], xy[1])
        return (int(r), int(c))

    def coverage(self) -> float:
        if self.reachable_count == 0:
            return 0.0
        return float(self.ever_free.sum()) / self.reachable_count

    # -------------------------------------------------------- state machine
    def _do_explore(self) -> None:
        fronts = self._frontiers()
        cm = self._explore_costmap()
        picked = choose_goal(fronts, self.est_pose, cm, self.config.explore)
        if picked is None:
            self.state = DONE
            self.terminated_by = "frontiers_exhausted"
            self._event("DONE", reason="frontiers_exhausted")
            return
        goal_pose, idx = picked
        self.goal = _GoalInfo(goal_pose, self._quantize(fronts[idx].centroid))
        if self.est_pose.distance_to(goal_pose) <= self.config.policy.goal_tolerance:
            # frontier right under the vehicle (sensor blind wedge): rotate
            # in place to sweep it instead of planning a null path
            key = self.goal.key
            size = fronts[idx].size
            last_size = self.sweep_done_keys.get(key)
            if last_size is not None and size >= 0.7 * last_size:
                # turning toward it made no progress; unobservable from here
                self.blacklist.add(key)
                self._event("FRONTIER_BLACKLISTED", key=list(key),
                            reason="sweep_ineffective")
                self.goal = None
                return
            self.sweep_done_keys[key] = size
            self.state = SWEEP
            cx, cy = fronts[idx].centroid
            est = self.est_pose
            self.sweep_bearing = math.atan2(cy - est.y, cx - est.x)
            self.swept = 0.0
            self._event("SWEEP_STARTED", goal=[goal_pose.x, goal_pose.y])
            return
        self.state = PLAN
        self._event("GOAL_SELECTED", goal=[goal_pose.x, goal_pose.y],
                    frontier_size=fronts[idx].size)

    def _do_plan(self) -> None:
        assert self.goal is not None
        self.costmap = self._costmap_for_goal(self.goal.pose)
        self.costmap_version = self.slam_updates
        est = self.est_pose
        if self.costmap.is_lethal_at(est.x, est.y):
            # estimated pose pinched by inflation: plan from nearest free cell
            r, c = self.costmap.world_to_cell(est.x, est.y)
            free_cells = np.argwhere(~self.costmap.lethal)
            if free_cells.size == 0:
                self._plan_failed("no free space in costmap")
                return
            d = (free_cells[:, 0] - r) ** 2 + (free_cells[:, 1] - c) ** 2
            rr, cc = free_cells[int(np.argmin(d))]
            sx, sy = self.costmap.cell_to_world(rr, cc)
            start = (float(sx), float(sy))
        else:
            start = (est.x, est.y)
        result = plan_rrt_star(
            self.costmap, start, (self.goal.pose.x, self.goal.pose.y),
            self.config.rrt,
            rng_mod.stream(self.config.seed, "rrt", self.replan_count))
        self.replan_count += 1
        if not result.success or result.path is None:
            self._plan_failed("rrt_failure")
            return
        self.consecutive_plan_failures = 0
        self.path = result.path
        self.progress_log.clear()
        self.state = NAVIGATE
        self._event("PATH_PLANNED", cost=result.cost, nodes=result.n_nodes)

    def _plan_failed(self, reason: str) -> None:
        assert self.goal is not None
        self.consecutive_plan_failures += 1
        key = self.goal.key
        self.goal_failures[key] = self.goal_failures.get(key, 0) + 1
        self._event("PLAN_FAILED", reason=reason,
                    failures=self.goal_failures[key])
        if self.goal_failures[key] >= self.config.policy.frontier_blacklist_after:
            self.blacklist.add(key)
            self._event("FRONTIER_BLACKLISTED", key=list(key))
        self.goal = None
        self.path = None
        if self.consecutive_plan_failures >= \
                self.config.policy.max_consecutive_plan_failures:
            self.state = DONE
            self.terminated_by = "planning_failed"
            self._event("DONE", reason="planning_failed")
        else:
            self.state = EXPLORE

    def _path_blocked(self) -> bool:
        if self.path is None or self.costmap is None:
            return True
        # only obstacle-derived lethality blocks; unknown space ahead is the
        # point of a frontier goal
        occupied = self.best_map.occupied_mask()
        if not occupied.any():
            return False
        from scipy import ndimage
        dist = ndimage.distance_transform_edt(~occupied) * self.best_map.resolution
        step = self.best_map.resolution
        for i in range(len(self.path) - 1):
            a, b = self.path[i], self.path[i + 1]
            seg = b - a
            n = max(int(np.ceil(np.linalg.norm(seg) / step)), 1)
            t = np.linspace(0.0, 1.0, n + 1)
            pts = a[None, :] + t[:, None] * seg[None, :]
            r, co = self.best_map.world_to_cell(pts[:, 0], pts[:, 1])
            ok = self.best_map.in_bounds(r, co)
            if np.any(dist[r[ok], co[ok]] <= self.config.policy.lethal_radius):
                return True
        return False

    def _stuck(self) -> bool:
        policy = self.config.policy
        est = self.est_pose
        now = self.sim_time
        self.progress_log.append((now, est.x, est.y))
        horizon = now - policy.stuck_timeout
        self.progress_log = [p for p in self.progress_log if p[0] >= horizon]
        if not self.progress_log or self.progress_log[0][0] > horizon + policy.tick_dt:
            return False  # window not full yet
        x0, y0 = self.progress_log[0][1], self.progress_log[0][2]
        return math.hypot(est.x - x0, est.y - y0) < policy.stuck_distance

    def _goal_vanished(self) -> bool:
        assert self.goal is not None
        fronts = self._frontiers()
        gx, gy = self.goal.pose.x, self.goal.pose.y
        radius = self.config.policy.goal_carve_radius + 0.5
        for f in fronts:
            d = math.hypot(f.centroid[0] - gx, f.centroid[1] - gy)
            if d <= radius:
                return False
            cx, cy = self.best_map.cell_to_world(f.cells[:, 0], f.cells[:, 1])
            if np.any(np.hypot(cx - gx, cy - gy) <= radius):
                return False
        return True

    def _do_sweep(self) -> None:
        """Rotate in place until the blind-wedge frontier enters the sensor
        field of view, then settle for one scan. Rotation is kept moderate:
        fast full turns smear the map and can hop wall-symmetry modes."""
        dt = self.config.policy.tick_dt
        dwa = self.config.dwa
        half_fov = self.config.lidar.fov / 2.0
        err = wrap_angle(self.sweep_bearing - self.est_pose.theta)
        in_view = abs(err) < half_fov - 0.3
        self.swept += abs(self.vel.w) * dt
        if (in_view and self.sweep_settle >= 2) \
                or self.swept >= 2.0 * math.pi * 1.05:
            self.cmd = STOP
            self.goal = None
            self.state = EXPLORE
            self.sweep_settle = 0
            self._event("SWEEP_DONE")
            return
        if in_view:
            self.sweep_settle += 1
            self.force_slam_update = True  # integrate the newly visible wedge
            self.cmd = STOP
            return
        w_cap = min(dwa.w_max, 0.8)
        direction = 1.0 if err >= 0 else -1.0
        w = direction * min(w_cap, abs(self.vel.w) + dwa.a_w * dt)
        self.cmd = Twist(0.0, w)

    def _do_navigate(self) -> None:
        assert self.goal is not None and self.path is not None
        policy = self.config.policy
        est = self.est_pose
        # The path end is the navigation target; it sits within the planner's
        # goal tolerance of the frontier goal, and sensing covers the rest.
        end = self.path[-1]
        reached = math.hypot(end[0] - est.x, end[1] - est.y) <= policy.goal_tolerance \
            or est.distance_to(self.goal.pose) <= policy.goal_tolerance
        if reached:
            self._event("GOAL_REACHED")
            self.goal = None
            self.path = None
            self.cmd = STOP
            self.state = EXPLORE
            return
        if self.map_dirty and self.costmap_version != self.slam_updates:
            self.costmap = self._costmap_for_goal(self.goal.pose)
            self.costmap_version = self.slam_updates
            if self._path_blocked():
                self._event("REPLAN", reason="path_blocked")
                self.state = PLAN
                return
        if self.tick_count % policy.frontier_recheck_ticks == 0 \
                and self.tick_count > 0 and self._goal_vanished():
            self._event("GOAL_OBSOLETE")
            self.goal = None
            self.path = None
            self.cmd = STOP
            self.state = EXPLORE
            return
        if self._stuck():
            key = self.goal.key
            self.goal_failures[key] = self.goal_failures.get(key, 0) + 1
            self._event("REPLAN", reason="stuck",
                        failures=self.goal_failures[key])
            if self.goal_failures[key] >= policy.frontier_blacklist_after:
                self.blacklist.add(key)
                self._event("FRONTIER_BLACKLISTED", key=list(key))
                self.goal = None
                self.path = None
                self.state = EXPLORE
            else:
                self.state = PLAN
            self.progress_log.clear()
            return
        assert self.costmap is not None
        self.cmd = dwa_step(est, self.vel, self.path, self.costmap,
                            self.config.dwa, dt_cmd=policy.tick_dt)

    def _capture(self) -> None:
        gt = thermal_capture(self.world, self.true_pose, self.config.thermal,
                             image_id=f"tick{self.tick_count}")
        preds = simulate_detector(
            gt, self.config.detector,
            rng_mod.stream(self.config.seed, "detector", self.tick_count))
        self.detections.append({
            "tick": self.tick_count,
            "gt": boxes_to_json([gt]),
            "pred": boxes_to_json([preds]),
        })

    def _record_state(self) -> None:
        est = self.est_pose
        self.trajectory.append({
            "tick": self.tick_count,
            "t": round(self.sim_time, 9),
            "true": [self.true_pose.x, self.true_pose.y, self.true_pose.theta],
            "est": [est.x, est.y, est.theta],
            "coverage": round(self.coverage(), 9),
            "state": self.state,
        })

    # --------------------------------------------------------------- public
    def tick(self) -> list[dict]:
        """Advance one control period; returns events emitted this tick."""
        if self.state == DONE:
            return []
        n_events = len(self.events)
        policy = self.config.policy
        self.tick_count += 1
        self.sim_time += policy.tick_dt

        self.true_pose, odom_delta = motion_step(
            self.true_pose, self.cmd, policy.tick_dt, self.config.odom_noise,
            rng_mod.stream(self.config.seed, "odom", self.tick_count))
        self.vel = self.cmd
        self.pending_odom = self.pending_odom.compose(odom_delta)
        self.moved_since_update += math.hypot(odom_delta.x, odom_delta.y)
        self.turned_since_update += abs(odom_delta.theta)

        if self.world.clearance(self.true_pose.x, self.true_pose.y) \
                <= policy.robot_radius:
            self.collision = True
            self.state = DONE
            self.terminated_by = "collision"
            self._event("COLLISION", pose=[self.true_pose.x, self.true_pose.y])
            self._record_state()
            return self.events[n_events:]

        self._sense()

        if self.state == EXPLORE:
            self.cmd = STOP
            self._do_explore()
            if self.state == PLAN:
                self._do_plan()
        elif self.state == PLAN:
            self._do_plan()
        elif self.state == SWEEP:
            self._do_sweep()
        if self.state == NAVIGATE:
            self._do_navigate()
            if self.state == PLAN:
                self._do_plan()

        if self.state == DONE:
            self.cmd = STOP

        if policy.capture_every > 0 and self.tick_count % policy.capture_every == 0:
            self._capture()

        if self.sim_time >= policy.time_budget and self.state != DONE:
            self.state = DONE
            self.terminated_by = "time_budget"
            self._event("DONE", reason="time_budget")

        self.map_dirty = False
        self._record_state()
        return self.events[n_events:]

    def run(self) -> MissionReport:
        t0 = time.perf_counter()
        while self.state != DONE:
            self.tick()
        wall = time.perf_counter() - t0

        agreement = map_agreement(self.best_map, self.world.gt_grid)
        spall_reports = self._process_columns()
        report = MissionReport(
            seed=self.config.seed,
            config=self.config.to_dict(),
            terminated_by=self.terminated_by or "unknown",
            trajectory=self.trajectory,
            events=self.events,
            detections=self.detections,
            spall=spall_reports,
            coverage=self.coverage(),
            map_agreement=agreement.fraction,
            map_agreement_cells=agreement.observed_cells,
            final_map=grid_to_dict(self.best_map),
            ticks=self.tick_count,
            sim_time=round(self.sim_time, 9),
            wall_time=wall,
            collision_events=1 if self.collision else 0,
            replan_count=self.replan_count,
            slam_updates=self.slam_updates,
        )
        return report

    def _process_columns(self) -> list[dict]:
        out: list[dict] = []
        for col in self.world.columns:
            path = self.config.column_clouds.get(col.spec_id)
            if path is None:
                continue
            try:
                cloud = preprocess(load_cloud(path))
                prism = segment_prism(
                    cloud, rng=rng_mod.stream(self.config.seed, "spall", col.spec_id))
                rep = spall_volume(cloud, prism, self.config.spall_slice_h,
                                   self.config.spall_bins)
                out.append({"column": col.spec_id, "volume_cm3": rep.volume_cm3,
                            "slices": len(rep.slices)})
            except (ValueError, OSError) as e:
                out.append({"column": col.spec_id, "error": str(e)})
                self._event("SPALL_FAILED", column=col.spec_id, error=str(e))
        return out


def run_mission(config: MissionConfig, world: World | None = None) -> MissionReport:
    return Mission(config, world).run()
