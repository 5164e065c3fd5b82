"""Grid A* planning and scripted experts that produce demonstration episodes."""

from __future__ import annotations

import heapq
import math

import numpy as np

from hxe.core import DT, EmbodimentProfile, Episode, HxeError, Pose2D, Pose3D, wrap_yaw
from hxe.simworld.kinematics import NavState, arm_inverse_kinematics, step_unicycle
from hxe.simworld.render import render_egocentric
from hxe.simworld.tasks import ARM_BASE, TaskInstance
from hxe.simworld.world import Circle, Rect, World, check_collision

GRID_RES = 0.05
ARM_CLOSE_STEPS = 2


class PlanningError(HxeError):
    pass


def clearance_field(world: World, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    d = np.full(X.shape, np.inf)
    for ob in world.obstacles:
        if isinstance(ob, Rect):
            dx = np.maximum(np.maximum(ob.xmin - X, 0.0), X - ob.xmax)
            dy = np.maximum(np.maximum(ob.ymin - Y, 0.0), Y - ob.ymax)
            d = np.minimum(d, np.hypot(dx, dy))
        elif isinstance(ob, Circle):
            d = np.minimum(d, np.maximum(np.hypot(X - ob.x, Y - ob.y) - ob.r, 0.0))
    return d


def astar(free: np.ndarray, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]]:
    """8-connected A* on a boolean grid; raises PlanningError when no path exists."""
    nx, ny = free.shape
    if not free[start]:
        raise PlanningError(f"start cell {start} is not free")
    if not free[goal]:
        raise PlanningError(f"goal cell {goal} is not free")
    moves = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)] + [
        (dx, dy, math.sqrt(2)) for dx in (-1, 1) for dy in (-1, 1)
    ]

    def h(c):
        dx, dy = abs(c[0] - goal[0]), abs(c[1] - goal[1])
        return max(dx, dy) + (math.sqrt(2) - 1) * min(dx, dy)

    g = {start: 0.0}
    parent: dict = {start: None}
    heap = [(h(start), 0, start)]
    tie = 0
    closed = set()
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur == goal:
            path = [cur]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        if cur in closed:
            continue
        closed.add(cur)
        for dx, dy, cost in moves:
            nb = (cur[0] + dx, cur[1] + dy)
            if not (0 <= nb[0] < nx and 0 <= nb[1] < ny) or not free[nb]:
                continue
            if dx and dy and not (free[cur[0] + dx, cur[1]] and free[cur[0], cur[1] + dy]):
                continue
            ng = g[cur] + cost
            if ng < g.get(nb, math.inf):
                g[nb] = ng
                parent[nb] = cur
                tie += 1
                heapq.heappush(heap, (ng + h(nb), tie, nb))
    raise PlanningError("no path between start and goal")


def plan_path(world: World, start: np.ndarray, goal: np.ndarray, inflate: float, domain=None) -> list[np.ndarray]:
    """A* at GRID_RES followed by line-of-sight shortcutting into straight segments."""
    b = world.bounds
    xs = np.arange(b.xmin + GRID_RES / 2, b.xmax, GRID_RES)
    ys = np.arange(b.ymin + GRID_RES / 2, b.ymax, GRID_RES)
    clear = clearance_field(world, xs, ys)
    free = clear > inflate
    if domain is not None:
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        free &= domain(X, Y)
    if world.obstacle_distance(*goal) <= inflate:
        raise PlanningError(f"goal ({goal[0]:.3f}, {goal[1]:.3f}) lies inside an obstacle")

    def cell(p):
        return (
            int(np.clip(round((p[0] - xs[0]) / GRID_RES), 0, len(xs) - 1)),
            int(np.clip(round((p[1] - ys[0]) / GRID_RES), 0, len(ys) - 1)),
        )

    sc, gc = cell(start), cell(goal)
    # the exact endpoints may fall in cells marked blocked by discretisation
    free[sc] = free[sc] or world.obstacle_distance(*start) > inflate
    free[gc] = True
    cells = astar(free, sc, gc)
    pts = [np.array([xs[i], ys[j]]) for i, j in cells]
    pts[0], pts[-1] = np.asarray(start, float), np.asarray(goal, float)

    def visible(p, q) -> bool:
        n = max(2, int(np.ceil(np.linalg.norm(q - p) / (GRID_RES / 2))) + 1)
        for s in np.linspace(0.0, 1.0, n):
            x = p + s * (q - p)
            if world.obstacle_distance(*x) <= inflate:
                return False
            if domain is not None and not domain(np.array(x[0]), np.array(x[1])):
                return False
        return True

    out = [pts[0]]
    i = 0
    while i < len(pts) - 1:
        j = len(pts) - 1
        while j > i + 1 and not visible(pts[i], pts[j]):
            j -= 1
        out.append(pts[j])
        i = j
    return out


def arm_camera_pose(ee: Pose2D, profile: EmbodimentProfile) -> Pose2D:
    off = profile.camera_offset
    return Pose2D(ee.x - off * math.cos(ee.yaw), ee.y - off * math.sin(ee.yaw), ee.yaw)


def arm_domain(links, base: Pose2D = ARM_BASE, margin: float = 0.02):
    l1, l2, l3 = links
    lo, hi = abs(l1 - l2) + margin, l1 + l2 - margin

    def inside(X, Y):
        # tool yaw equals base yaw, so the wrist sits l3 behind the tool point
        wx = X - base.x - l3 * math.cos(base.yaw)
        wy = Y - base.y - l3 * math.sin(base.yaw)
        r = np.hypot(wx, wy)
        return (r >= lo) & (r <= hi)

    return inside


def physical_to_native(phys: np.ndarray, profile: EmbodimentProfile) -> np.ndarray:
    perm = np.asarray(profile.native_perm)
    signs = np.asarray(profile.native_signs, dtype=np.float64)
    return signs * phys[perm]


def native_to_physical(native: np.ndarray, profile: EmbodimentProfile) -> np.ndarray:
    perm = np.asarray(profile.native_perm)
    signs = np.asarray(profile.native_signs, dtype=np.float64)
    phys = np.zeros_like(native, dtype=np.float64)
    phys[..., perm] = signs * native
    return phys


def egocentric_delta(p0: Pose2D, p1: Pose2D) -> tuple[float, float]:
    dx, dy = p1.x - p0.x, p1.y - p0.y
    c, s = math.cos(p0.yaw), math.sin(p0.yaw)
    return c * dx + s * dy, -s * dx + c * dy


def scripted_expert(
    instance: TaskInstance, profile: EmbodimentProfile, seed: int = 0, dataset_id: str = ""
) -> Episode:
    rng = np.random.default_rng(seed)
    if profile.kind == "navigator":
        return _nav_expert(instance, profile, rng, dataset_id)
    if profile.kind in ("manipulator", "mobile_manipulator"):
        return _arm_expert(instance, profile, rng, dataset_id)
    if profile.kind == "drone":
        return _drone_expert(instance, profile, rng, dataset_id)
    raise PlanningError(f"no expert for embodiment kind {profile.kind}")


CREEP = 0.25


def nav_expert_command(pose: Pose2D, target: np.ndarray, v_nom: float, profile: EmbodimentProfile) -> tuple[float, float]:
    """Turn toward the current waypoint, creeping forward until roughly aligned.

    The creep keeps every step's translation nonzero, so a few-step waypoint
    chunk always points somewhere even mid-turn.
    """
    dx, dy = target[0] - pose.x, target[1] - pose.y
    dist = math.hypot(dx, dy)
    err = wrap_yaw(math.atan2(dy, dx) - pose.yaw)
    omega = float(np.clip(err / DT, -profile.omega_max, profile.omega_max))
    if abs(err) > 0.15:
        return min(CREEP * v_nom, dist / DT), omega
    v = min(v_nom, dist / DT)
    return v, omega


def _nav_expert(instance: TaskInstance, profile: EmbodimentProfile, rng, dataset_id: str) -> Episode:
    world = instance.world
    start, goal = instance.start, instance.goal
    if check_collision(world, start.x, start.y, profile.radius):
        raise PlanningError("start pose collides")
    path = plan_path(world, start.xy, goal.xy, profile.radius + 0.12)
    v_nom = profile.v_max * rng.uniform(0.75, 0.9)
    state = NavState(start)
    poses = [start]
    wp = 1
    for _ in range(600):
        p = state.pose
        if math.hypot(goal.x - p.x, goal.y - p.y) < 0.05:
            break
        while wp < len(path) - 1 and np.linalg.norm(path[wp] - p.xy) < 0.05:
            wp += 1
        v, omega = nav_expert_command(p, path[wp], v_nom, profile)
        state = step_unicycle(state, v, omega, DT, profile.v_max, profile.omega_max)
        if check_collision(world, state.pose.x, state.pose.y, profile.radius):
            raise PlanningError("expert trajectory collided")
        poses.append(state.pose)
    else:
        raise PlanningError("expert did not reach the goal in time")
    actions = np.array([egocentric_delta(poses[i], poses[i + 1]) for i in range(len(poses) - 1)])
    obs = [
        render_egocentric(world, p, profile.fov, profile.view_range, timestamp=i) for i, p in enumerate(poses)
    ]
    return Episode(
        dataset_id, profile.embodiment_id, obs, actions, poses,
        {"task": instance.task, "seed": world.seed},
    )


def _arm_expert(instance: TaskInstance, profile: EmbodimentProfile, rng, dataset_id: str) -> Episode:
    world = instance.world
    start, goal = instance.start, instance.goal
    base = Pose2D(*instance.extra["arm_base"]) if "arm_base" in instance.extra else ARM_BASE
    links = profile.link_lengths
    domain = arm_domain(links, base)
    if not domain(np.array(goal.x), np.array(goal.y)):
        raise PlanningError("goal outside arm workspace")
    path = plan_path(world, start.xy, goal.xy, profile.radius + 0.02, domain)
    step = profile.step_max * rng.uniform(0.85, 1.0)
    ee = start.xy.copy()
    poses = [Pose2D(ee[0], ee[1], base.yaw)]
    phys_actions = []
    for wp in path[1:]:
        while True:
            d = wp - ee
            dist = float(np.linalg.norm(d))
            if dist < 1e-9:
                break
            delta = d if dist <= step else d * (step / dist)
            ee = ee + delta
            c, s = math.cos(base.yaw), math.sin(base.yaw)
            phys_actions.append([c * delta[0] + s * delta[1], -s * delta[0] + c * delta[1], 0, 0, 0, 0, 1.0])
            poses.append(Pose2D(ee[0], ee[1], base.yaw))
            if check_collision(world, ee[0], ee[1], profile.radius):
                raise PlanningError("expert trajectory collided")
            if len(poses) > 200:
                raise PlanningError("expert did not reach the goal in time")
    for _ in range(ARM_CLOSE_STEPS):
        phys_actions.append([0, 0, 0, 0, 0, 0, -1.0])
        poses.append(poses[-1])
    for p in poses:
        if arm_inverse_kinematics(p, links, base) is None:
            raise PlanningError("expert pose unreachable")
    native = np.array([physical_to_native(np.array(a, float), profile) for a in phys_actions])
    obs = [
        render_egocentric(world, arm_camera_pose(p, profile), profile.fov, profile.view_range, timestamp=i)
        for i, p in enumerate(poses)
    ]
    return Episode(
        dataset_id, profile.embodiment_id, obs, native, poses,
        {"task": instance.task, "target_id": instance.target_id, "seed": world.seed},
    )


def _drone_expert(instance: TaskInstance, profile: EmbodimentProfile, rng, dataset_id: str) -> Episode:
    world = instance.world
    start, goal = instance.start, instance.goal
    alt0, alt1 = rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.6)
    path = plan_path(world, start.xy, goal.xy, profile.radius + 0.12)
    pts = [np.array([p[0], p[1], 0.0]) for p in path]
    pts[0][2] = alt0
    for i in range(1, len(pts)):
        pts[i][2] = alt1
    pos = pts[0].copy()
    yaw = start.yaw
    poses = [Pose3D(pos[0], pos[1], pos[2], yaw)]
    actions = []
    c, s = math.cos(yaw), math.sin(yaw)
    for wp in pts[1:]:
        while True:
            d = wp - pos
            dist = float(np.linalg.norm(d))
            if dist < 1e-9:
                break
            delta = d if dist <= profile.step_max else d * (profile.step_max / dist)
            pos = pos + delta
            actions.append([c * delta[0] + s * delta[1], -s * delta[0] + c * delta[1], delta[2]])
            poses.append(Pose3D(pos[0], pos[1], pos[2], yaw))
            if check_collision(world, pos[0], pos[1], profile.radius):
                raise PlanningError("expert trajectory collided")
    if len(poses) < 2:
        raise PlanningError("degenerate drone task")
    obs = [
        render_egocentric(world, p, profile.fov, profile.view_range, timestamp=i) for i, p in enumerate(poses)
    ]
    return Episode(dataset_id, profile.embodiment_id, obs, np.array(actions), poses, {"task": instance.task})
