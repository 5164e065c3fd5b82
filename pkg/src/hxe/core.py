"""Domain types and unit conventions shared across the package.

Unified action layout (7 dims, normalized to [-1, 1]):

    0-2  delta translation: x into the image, y left, z up
    3-5  delta rotation
    6    gripper (+1 open, -1 closed; 0 for navigation-origin actions)

Yaw is measured counterclockwise from the world +x axis and wrapped to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

UNIFIED_DIM = 7
TRANSLATION_DIMS = (0, 1, 2)
ROTATION_DIMS = (3, 4, 5)
GRIPPER_DIM = 6
GRIPPER_OPEN = 1.0
GRIPPER_CLOSED = -1.0

OBS_SHAPE = (16, 16, 2)
OBSTACLE_CHANNEL = 0
OBJECT_CHANNEL = 1

# one simulator step == one topomap frame (4 Hz)
DT = 0.25

_EPS = 1e-9


class HxeError(Exception):
    """Base class for all package errors."""


class InvalidAction(HxeError, ValueError):
    pass


class ConfigError(HxeError, ValueError):
    pass


class ShapeError(HxeError, ValueError):
    pass


class PersistenceError(HxeError):
    """Base for on-disk format problems."""


class FormatError(PersistenceError):
    """Bad magic bytes or malformed layout."""


class VersionError(PersistenceError):
    pass


class TruncatedError(PersistenceError):
    pass


class ChecksumError(PersistenceError):
    pass


def wrap_yaw(phi: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    if not math.isfinite(phi):
        raise ValueError(f"non-finite yaw: {phi}")
    if -math.pi < phi <= math.pi:
        # already wrapped; (phi + pi) - pi would not round-trip bitwise
        return float(phi)
    out = math.fmod(phi + math.pi, 2.0 * math.pi)
    if out <= 0.0:
        out += 2.0 * math.pi
    return out - math.pi


@dataclass(frozen=True)
class UnifiedAction:
    v: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=np.float64).reshape(-1)
        if v.shape != (UNIFIED_DIM,):
            raise InvalidAction(f"unified action needs {UNIFIED_DIM} components, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidAction(f"non-finite unified action: {v}")
        if np.any(np.abs(v) > 1.0 + _EPS):
            raise InvalidAction(f"unified action out of [-1, 1]: {v}")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def translation(self) -> np.ndarray:
        return self.v[:3]

    @property
    def gripper(self) -> float:
        return float(self.v[GRIPPER_DIM])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, UnifiedAction) and np.array_equal(self.v, other.v)

    def __hash__(self) -> int:
        return hash(self.v.tobytes())


def clamp_unified(a: Sequence[float] | np.ndarray) -> UnifiedAction:
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise InvalidAction(f"non-finite component in {a}")
    return UnifiedAction(np.clip(a, -1.0, 1.0))


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "yaw", wrap_yaw(float(self.yaw)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_tuple(self) -> tuple[float, ...]:
        return (self.x, self.y, self.yaw)


@dataclass(frozen=True)
class Pose3D:
    x: float
    y: float
    z: float
    yaw: float = 0.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "yaw", wrap_yaw(float(self.yaw)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_tuple(self) -> tuple[float, ...]:
        return (self.x, self.y, self.z, self.yaw)


Pose = Union[Pose2D, Pose3D]


@dataclass(frozen=True)
class EgoObservation:
    raster: np.ndarray
    timestamp: int = 0

    def __post_init__(self) -> None:
        r = np.asarray(self.raster, dtype=np.float32)
        if r.ndim != 3:
            raise ShapeError(f"raster must be H x W x C, got shape {r.shape}")
        if r.size and (r.min() < 0.0 or r.max() > 1.0):
            raise ValueError("raster cells must lie in [0, 1]")
        r.setflags(write=False)
        object.__setattr__(self, "raster", r)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.raster.shape  # type: ignore[return-value]


@dataclass
class Episode:
    dataset_id: str
    embodiment_id: str
    observations: list[EgoObservation]
    raw_actions: np.ndarray  # (T-1, action_dim) float32
    poses: list[Pose]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.raw_actions = np.asarray(self.raw_actions, dtype=np.float32)
        if self.raw_actions.ndim == 1:
            self.raw_actions = self.raw_actions.reshape(len(self.raw_actions), -1)
        self.validate()

    @property
    def length(self) -> int:
        return len(self.observations)

    @property
    def action_dim(self) -> int:
        return int(self.raw_actions.shape[1])

    def validate(self) -> None:
        T = len(self.observations)
        if T < 2:
            raise ValueError(f"episode needs at least 2 steps, got {T}")
        if len(self.poses) != T:
            raise ValueError(f"{len(self.poses)} poses for {T} observations")
        if self.raw_actions.shape[0] != T - 1:
            raise ValueError(f"{self.raw_actions.shape[0]} actions for {T} observations")
        shapes = {o.shape for o in self.observations}
        if len(shapes) != 1:
            raise ShapeError(f"mixed observation shapes in one episode: {shapes}")
        if len({type(p) for p in self.poses}) != 1:
            raise ValueError("mixed pose kinds in one episode")

    def obs_array(self) -> np.ndarray:
        return np.stack([o.raster for o in self.observations])


EMBODIMENT_KINDS = ("navigator", "manipulator", "drone", "mobile_manipulator")


@dataclass(frozen=True)
class EmbodimentProfile:
    embodiment_id: str
    kind: str
    action_dim: int
    convention: str
    # arm geometry
    link_lengths: tuple[float, ...] = ()
    joint_limit: float = math.pi
    camera_offset: float = 0.0      # camera sits this far behind the tool point
    camera_tilt: float = 0.0        # radians below horizontal, informational
    # mobility
    v_max: float = 0.6
    omega_max: float = 2.0
    step_max: float = 0.05
    radius: float = 0.15
    view_range: float = 3.0
    fov: float = math.pi
    # dataset-native action layout, see datapipe.alignment
    native_perm: tuple[int, ...] = ()
    native_signs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in EMBODIMENT_KINDS:
            raise ConfigError(f"unknown embodiment kind {self.kind!r}")
        expected = {"navigator": 2, "manipulator": 7, "drone": 3, "mobile_manipulator": 7}[self.kind]
        if self.action_dim != expected:
            raise ConfigError(
                f"{self.embodiment_id}: action_dim {self.action_dim} does not match kind {self.kind}"
            )
