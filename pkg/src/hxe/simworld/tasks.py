"""Task specifications and reproducible world generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hxe.core import ConfigError, Pose2D
from hxe.simworld.embodiments import ARM_LINKS
from hxe.simworld.world import Circle, Rect, TaskObject, World

MANIP_TASKS = ("two_object_reach", "cluttered_reach", "novel_cluttered_reach", "shelf_reach")
NAV_TASKS = ("corridor_nav", "kitchen_nav")
MOBILE_TASKS = ("mobile_reach_place",)
TASK_NAMES = MANIP_TASKS + NAV_TASKS + MOBILE_TASKS

TRAIN_SHADES = (0.35, 0.5, 0.65, 0.8, 0.95)
NOVEL_SHADES = (0.28, 0.43, 0.58, 0.73, 0.88)
TRAIN_RADIUS = 0.04
NOVEL_RADIUS = 0.06

ARM_BASE = Pose2D(0.0, 0.0, 0.0)
ARM_BOUNDS = Rect(-0.3, -1.0, 1.8, 1.0)


@dataclass(frozen=True)
class TaskSpec:
    name: str
    seed: int = 0
    tolerance: float | None = None
    max_steps: int | None = None
    collision_budget: int = 0

    def __post_init__(self) -> None:
        if self.name not in TASK_NAMES:
            raise ConfigError(f"unknown task {self.name!r}; known: {TASK_NAMES}")
        if self.tolerance is None:
            object.__setattr__(self, "tolerance", 0.2 if self.name in NAV_TASKS else 0.1)
        if self.max_steps is None:
            steps = {"corridor_nav": 160, "kitchen_nav": 160, "mobile_reach_place": 160}
            object.__setattr__(self, "max_steps", steps.get(self.name, 40))

    @property
    def domain(self) -> str:
        return "navigation" if self.name in NAV_TASKS else "manipulation"

    @property
    def embodiment_kind(self) -> str:
        if self.name in NAV_TASKS:
            return "navigator"
        if self.name in MOBILE_TASKS:
            return "mobile_manipulator"
        return "manipulator"

    def instance(self, index: int) -> "TaskInstance":
        """Deterministic world + start + goal for trial ``index``."""
        rng = np.random.default_rng([self.seed, index, TASK_NAMES.index(self.name)])
        return _GENERATORS[self.name](rng, self.seed * 100003 + index)


@dataclass(frozen=True)
class TaskInstance:
    task: str
    world: World
    start: Pose2D
    goal: Pose2D  # tool/base pose at which the task is complete
    target_id: int | None = None
    extra: dict = field(default_factory=dict, compare=False, hash=False)


# ---------------------------------------------------------------- manipulation


def _arm_start(rng) -> Pose2D:
    return Pose2D(0.40 + rng.uniform(-0.02, 0.02), rng.uniform(-0.05, 0.05), 0.0)


def _place_objects(rng, n, region, min_sep, taken=()) -> list[np.ndarray]:
    (x0, x1), (y0, y1) = region
    pts: list[np.ndarray] = list(taken)
    out: list[np.ndarray] = []
    for _ in range(2000):
        p = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        if all(np.linalg.norm(p - q) >= min_sep for q in pts):
            pts.append(p)
            out.append(p)
            if len(out) == n:
                return out
    raise RuntimeError("could not place objects")


def _reachable(p: np.ndarray) -> bool:
    l1, l2, l3 = ARM_LINKS
    w = np.linalg.norm(p - np.array([l3, 0.0]))
    return abs(l1 - l2) + 0.02 <= w <= l1 + l2 - 0.02


def _two_object(rng, seed) -> TaskInstance:
    shades = rng.choice(TRAIN_SHADES, size=2, replace=False)
    ys = (rng.uniform(0.2, 0.35), -rng.uniform(0.2, 0.35))
    objs = tuple(
        TaskObject(i, rng.uniform(0.85, 1.0), ys[i], TRAIN_RADIUS, float(shades[i])) for i in range(2)
    )
    target = int(rng.integers(2))
    world = World(ARM_BOUNDS, (), objs, seed)
    o = objs[target]
    return TaskInstance("two_object_reach", world, _arm_start(rng), Pose2D(o.x, o.y, 0.0), target)


def _cluttered(rng, seed, novel: bool) -> TaskInstance:
    shades = NOVEL_SHADES if novel else TRAIN_SHADES
    radius = NOVEL_RADIUS if novel else TRAIN_RADIUS
    pts = _place_objects(rng, 5, ((0.7, 1.05), (-0.4, 0.4)), 0.15)
    order = rng.permutation(5)
    objs = tuple(TaskObject(i, float(p[0]), float(p[1]), radius, float(shades[order[i]])) for i, p in enumerate(pts))
    target = int(rng.integers(5))
    start = _arm_start(rng)
    obstacles: list = []
    if novel:
        # table clutter: small obstacles kept clear of the straight reach path and of every object
        a, b = start.xy, objs[target].xy
        for _ in range(200):
            if len(obstacles) == 3:
                break
            c = np.array([rng.uniform(0.55, 1.15), rng.uniform(-0.5, 0.5)])
            r = rng.uniform(0.03, 0.05)
            if _seg_dist(c, a, b) < r + 0.1:
                continue
            if any(np.linalg.norm(c - o.xy) < r + 0.08 for o in objs):
                continue
            if any(np.linalg.norm(c - np.array([ob.x, ob.y])) < r + ob.r + 0.05 for ob in obstacles):
                continue
            obstacles.append(Circle(float(c[0]), float(c[1]), float(r)))
    world = World(ARM_BOUNDS, tuple(obstacles), objs, seed)
    o = objs[target]
    name = "novel_cluttered_reach" if novel else "cluttered_reach"
    return TaskInstance(name, world, start, Pose2D(o.x, o.y, 0.0), target)


def _shelf(rng, seed) -> TaskInstance:
    # two compartments side by side, opening toward the arm base
    depth = rng.uniform(0.85, 1.0)
    cy = rng.uniform(-0.1, 0.1)
    w, d, t = 0.3, 0.22, 0.03
    x_open = depth - d / 2
    walls = [
        Rect(x_open + d, cy - w - t, x_open + d + t, cy + w + t),  # back
        Rect(x_open, cy + w, x_open + d, cy + w + t),  # left side
        Rect(x_open, cy - w - t, x_open + d, cy - w),  # right side
        Rect(x_open + 0.06, cy - t / 2, x_open + d, cy + t / 2),  # divider
    ]
    shades = rng.choice(TRAIN_SHADES, size=2, replace=False)
    objs = (
        TaskObject(0, depth, cy + w / 2, TRAIN_RADIUS, float(shades[0])),
        TaskObject(1, depth, cy - w / 2, TRAIN_RADIUS, float(shades[1])),
    )
    target = int(rng.integers(2))
    o = objs[target]
    return TaskInstance("shelf_reach", World(ARM_BOUNDS, tuple(walls), objs, seed), _arm_start(rng), Pose2D(o.x, o.y, 0.0), target)


def _seg_dist(p, a, b) -> float:
    ab = b - a
    s = np.clip(((p - a) @ ab) / max(ab @ ab, 1e-12), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + s * ab)))


# ---------------------------------------------------------------- navigation


def room_walls(bounds: Rect, t: float = 0.1) -> list[Rect]:
    b = bounds
    return [
        Rect(b.xmin, b.ymin, b.xmax, b.ymin + t),
        Rect(b.xmin, b.ymax - t, b.xmax, b.ymax),
        Rect(b.xmin, b.ymin, b.xmin + t, b.ymax),
        Rect(b.xmax - t, b.ymin, b.xmax, b.ymax),
    ]


def corridor_walls(points: np.ndarray, width: float, t: float = 0.1) -> list[Rect]:
    """Wall strips around an axis-aligned polyline corridor."""
    half = width / 2
    walls: list[Rect] = []
    m = len(points) - 1
    dirs = [(points[i + 1] - points[i]) / np.linalg.norm(points[i + 1] - points[i]) for i in range(m)]

    def turn(i):  # +1 left turn from segment i to i+1, -1 right
        d0, d1 = dirs[i], dirs[i + 1]
        return 1 if d0[0] * d1[1] - d0[1] * d1[0] > 0 else -1

    for i in range(m):
        d = dirs[i]
        n = np.array([-d[1], d[0]])
        for side in (1, -1):
            # start extension
            if i == 0:
                s0 = -half - t
            else:
                s0 = half if turn(i - 1) == side else -half - t
            if i == m - 1:
                s1 = half + t
            else:
                s1 = -half if turn(i) == side else half + t
            a = points[i] + d * s0 + n * side * half
            b = points[i + 1] + d * s1 + n * side * (half + t)
            walls.append(Rect(min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1])))
    for p, d in ((points[0], -dirs[0]), (points[-1], dirs[-1])):
        n = np.array([-d[1], d[0]])
        a = p + d * half + n * (half + t)
        b = p + d * (half + t) - n * (half + t)
        walls.append(Rect(min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1])))
    return walls


def _corridor(rng, seed) -> TaskInstance:
    width = rng.uniform(1.0, 1.4)
    legs = int(rng.integers(1, 4))
    p = np.array([1.0, 1.0])
    pts = [p.copy()]
    heading = 0
    for leg in range(legs):
        length = rng.uniform(2.5, 4.0) if leg == 0 else rng.uniform(1.8, 3.0)
        d = np.array([math.cos(heading * math.pi / 2), math.sin(heading * math.pi / 2)])
        p = p + d * length
        pts.append(p.round(6))
        heading += 1 if (leg % 2 == 0) else -1
    pts_arr = np.array(pts)
    walls = corridor_walls(pts_arr, width)
    lo = pts_arr.min(0) - width - 0.5
    hi = pts_arr.max(0) + width + 0.5
    bounds = Rect(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))
    objs = _landmarks_along(rng, pts_arr, width)
    world = World(bounds, tuple(walls), tuple(objs), seed)
    d0 = pts_arr[1] - pts_arr[0]
    start = Pose2D(float(pts_arr[0][0]), float(pts_arr[0][1]), math.atan2(d0[1], d0[0]))
    dl = pts_arr[-1] - pts_arr[-2]
    goal = Pose2D(float(pts_arr[-1][0]), float(pts_arr[-1][1]), math.atan2(dl[1], dl[0]))
    return TaskInstance("corridor_nav", world, start, goal, None, {"centerline": pts_arr.tolist()})


def _landmarks_along(rng, pts, width) -> list[TaskObject]:
    objs = []
    oid = 0
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        L = float(np.linalg.norm(b - a))
        d = (b - a) / L
        n = np.array([-d[1], d[0]])
        s = 0.3
        while s < L - 0.3:
            side = 1 if rng.random() < 0.5 else -1
            c = a + d * s + n * side * (width / 2 - 0.12)
            objs.append(TaskObject(oid, float(c[0]), float(c[1]), float(rng.uniform(0.06, 0.1)), float(rng.uniform(0.2, 1.0))))
            oid += 1
            s += rng.uniform(0.5, 1.0)
    return objs


def _open_room(rng, seed, name: str, size: float = 7.0, n_obstacles: int = 5, n_landmarks: int = 14) -> TaskInstance:
    bounds = Rect(0.0, 0.0, size, size)
    obstacles: list = room_walls(bounds)
    for _ in range(n_obstacles):
        if rng.random() < 0.5:
            cx, cy = rng.uniform(1.2, size - 1.2, size=2)
            w, h = rng.uniform(0.3, 1.0, size=2)
            obstacles.append(Rect(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2))
        else:
            cx, cy = rng.uniform(1.2, size - 1.2, size=2)
            obstacles.append(Circle(float(cx), float(cy), float(rng.uniform(0.2, 0.45))))
    world0 = World(bounds, tuple(obstacles), (), seed)
    objs = []
    for oid in range(n_landmarks):
        for _ in range(100):
            x, y = rng.uniform(0.3, size - 0.3, size=2)
            if world0.obstacle_distance(x, y) > 0.1:
                objs.append(TaskObject(oid, float(x), float(y), float(rng.uniform(0.06, 0.15)), float(rng.uniform(0.2, 1.0))))
                break
    world = World(bounds, tuple(obstacles), tuple(objs), seed)
    for _ in range(1000):
        s = rng.uniform(0.6, size - 0.6, size=2)
        g = rng.uniform(0.6, size - 0.6, size=2)
        if np.linalg.norm(s - g) < 3.5:
            continue
        if world.obstacle_distance(*s) < 0.45 or world.obstacle_distance(*g) < 0.45:
            continue
        yaw = float(rng.uniform(-math.pi, math.pi))
        return TaskInstance(name, world, Pose2D(float(s[0]), float(s[1]), yaw), Pose2D(float(g[0]), float(g[1]), 0.0))
    raise RuntimeError("could not sample start/goal")


def _kitchen(rng, seed) -> TaskInstance:
    return _open_room(rng, seed, "kitchen_nav", size=6.0, n_obstacles=4, n_landmarks=12)


def nav_world(rng, seed) -> TaskInstance:
    """Generic cluttered room used for navigation training data."""
    return _open_room(rng, seed, "nav_room", size=7.0, n_obstacles=int(rng.integers(3, 8)), n_landmarks=16)


# ---------------------------------------------------------------- mobile manipulation


def _mobile(rng, seed) -> TaskInstance:
    size = 6.0
    bounds = Rect(0.0, 0.0, size, size)
    walls = room_walls(bounds)
    obj_xy = np.array([rng.uniform(4.0, 5.0), rng.uniform(1.5, 4.5)])
    shades = rng.choice(TRAIN_SHADES, size=2, replace=False)
    objs = (
        TaskObject(0, float(obj_xy[0]), float(obj_xy[1] + 0.15), TRAIN_RADIUS, float(shades[0])),
        TaskObject(1, float(obj_xy[0]), float(obj_xy[1] - 0.15), TRAIN_RADIUS, float(shades[1])),
    )
    target = int(rng.integers(2))
    extra_obs = [Circle(float(rng.uniform(1.8, 3.0)), float(rng.uniform(1.0, 5.0)), 0.3)]
    world = World(bounds, tuple(walls + extra_obs), objs, seed)
    # base stops so the target sits comfortably inside the arm workspace
    base_goal = Pose2D(float(obj_xy[0] - 0.9), float(obj_xy[1]), 0.0)
    start = Pose2D(float(rng.uniform(0.7, 1.2)), float(rng.uniform(1.0, 5.0)), float(rng.uniform(-0.5, 0.5)))
    o = objs[target]
    return TaskInstance(
        "mobile_reach_place", world, start, Pose2D(o.x, o.y, 0.0), target, {"base_goal": base_goal.as_tuple()}
    )


_GENERATORS = {
    "two_object_reach": _two_object,
    "cluttered_reach": lambda rng, seed: _cluttered(rng, seed, False),
    "novel_cluttered_reach": lambda rng, seed: _cluttered(rng, seed, True),
    "shelf_reach": _shelf,
    "corridor_nav": _corridor,
    "kitchen_nav": _kitchen,
    "mobile_reach_place": _mobile,
}


def training_instance(kind: str, rng, seed: int) -> TaskInstance:
    """World generators used when producing demonstration datasets."""
    if kind == "nav_room":
        return nav_world(rng, seed)
    if kind in _GENERATORS:
        return _GENERATORS[kind](rng, seed)
    raise ConfigError(f"unknown world kind {kind!r}")
