"""Static world geometry: bounds, obstacles, task objects, collision queries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hxe.core import HxeError


class OutOfBounds(HxeError):
    pass


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    def distance(self, x: float, y: float) -> float:
        dx = max(self.xmin - x, 0.0, x - self.xmax)
        dy = max(self.ymin - y, 0.0, y - self.ymax)
        return float(np.hypot(dx, dy))

    def to_json(self) -> dict:
        return {"rect": [self.xmin, self.ymin, self.xmax, self.ymax]}


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    r: float

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x - self.x) ** 2 + (y - self.y) ** 2 <= self.r**2

    def distance(self, x: float, y: float) -> float:
        return max(float(np.hypot(x - self.x, y - self.y)) - self.r, 0.0)

    def to_json(self) -> dict:
        return {"circle": [self.x, self.y, self.r]}


Obstacle = Rect | Circle


@dataclass(frozen=True)
class TaskObject:
    id: int
    x: float
    y: float
    radius: float
    shade: float  # value written into the object channel

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class World:
    bounds: Rect
    obstacles: tuple[Obstacle, ...] = ()
    objects: tuple[TaskObject, ...] = ()
    seed: int = 0
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate object ids: {ids}")
        for o in self.objects:
            if not self.in_bounds(o.x, o.y):
                raise OutOfBounds(f"object {o.id} at ({o.x:.3f}, {o.y:.3f}) outside world bounds")

    def in_bounds(self, x: float, y: float) -> bool:
        b = self.bounds
        return b.xmin <= x <= b.xmax and b.ymin <= y <= b.ymax

    def object(self, oid: int) -> TaskObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    def obstacle_distance(self, x: float, y: float) -> float:
        if not self.obstacles:
            return float("inf")
        return min(ob.distance(x, y) for ob in self.obstacles)

    def occupied(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for ob in self.obstacles:
            out |= ob.contains(x, y)
        return out

    def to_json(self) -> dict:
        return {
            "bounds": [self.bounds.xmin, self.bounds.ymin, self.bounds.xmax, self.bounds.ymax],
            "obstacles": [ob.to_json() for ob in self.obstacles],
            "objects": [[o.id, o.x, o.y, o.radius, o.shade] for o in self.objects],
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "World":
        obstacles: list[Obstacle] = []
        for ob in d.get("obstacles", []):
            if "rect" in ob:
                obstacles.append(Rect(*ob["rect"]))
            else:
                obstacles.append(Circle(*ob["circle"]))
        objects = tuple(TaskObject(int(o[0]), *map(float, o[1:])) for o in d.get("objects", []))
        return cls(Rect(*d["bounds"]), tuple(obstacles), objects, int(d.get("seed", 0)))


def check_collision(world: World, x: float, y: float, radius: float) -> bool:
    """True iff a circular footprint touches any obstacle (closed sets, so tangency counts)."""
    if radius <= 0:
        raise ValueError("footprint radius must be positive")
    return any(ob.distance(x, y) <= radius for ob in world.obstacles)
