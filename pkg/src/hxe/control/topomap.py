"""Linear topological maps recorded from a traversal, and subgoal selection against them."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from hxe.core import ConfigError, EgoObservation, Episode, Pose, Pose2D
from hxe.datapipe.io import decode_episode, encode_episode

DEFAULT_LOOKAHEAD = 2
DEFAULT_D_MAX = 30.0
TOPOMAP_VERSION = 1

# (context (c, H, W, C), node rasters (N, H, W, C)) -> predicted temporal distances (N,)
DistanceFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class TopoMap:
    nodes: list[EgoObservation]
    stride: int = 1
    source_id: str = ""
    poses: list[Pose] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise ConfigError(f"a topological map needs at least 2 nodes, got {len(self.nodes)}")

    def __len__(self) -> int:
        return len(self.nodes)

    def rasters(self) -> np.ndarray:
        return np.stack([n.raster for n in self.nodes])

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        poses = self.poses or [Pose2D(0.0, 0.0, 0.0)] * len(self.nodes)
        ep = Episode(self.source_id, "", self.nodes, np.zeros((len(self.nodes) - 1, 0), np.float32), poses)
        (d / "nodes.hxe").write_bytes(encode_episode(ep))
        meta = {"version": TOPOMAP_VERSION, "node_count": len(self.nodes), "stride": self.stride,
                "source_episode": self.source_id, "has_poses": bool(self.poses)}
        (d / "topomap.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory) -> "TopoMap":
        d = Path(directory)
        meta = json.loads((d / "topomap.json").read_text(encoding="utf-8"))
        if meta.get("version") != TOPOMAP_VERSION:
            raise ConfigError(f"unsupported topomap version {meta.get('version')!r}")
        ep = decode_episode((d / "nodes.hxe").read_bytes(), meta["source_episode"])
        if ep.length != meta["node_count"]:
            raise ConfigError(f"topomap.json lists {meta['node_count']} nodes, nodes.hxe holds {ep.length}")
        return cls(ep.observations, int(meta["stride"]), meta["source_episode"], ep.poses if meta["has_poses"] else [])


def build_topomap(traversal: Episode, stride: int = 1, source_id: str | None = None) -> TopoMap:
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    if traversal.length < 2:
        raise ConfigError(f"traversal of length {traversal.length} is too short for a map")
    idx = list(range(0, traversal.length, stride))
    if len(idx) < 2:
        raise ConfigError(f"stride {stride} leaves fewer than 2 nodes from {traversal.length} frames")
    sid = source_id if source_id is not None else str(traversal.meta.get("source", traversal.dataset_id))
    return TopoMap([traversal.observations[i] for i in idx], stride, sid, [traversal.poses[i] for i in idx])


def select_subgoal(distances, lookahead: int = DEFAULT_LOOKAHEAD, d_max: float = DEFAULT_D_MAX) -> tuple[int, int]:
    """(closest node, subgoal node) from per-node predicted distances.

    Ties in the argmin go to the larger index. The subgoal starts ``lookahead``
    nodes past the closest one and steps back while its distance exceeds ``d_max``.
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 1 or len(d) == 0:
        raise ValueError("need a non-empty 1-D distance vector")
    i_star = len(d) - 1 - int(np.argmin(d[::-1]))
    j = min(i_star + lookahead, len(d) - 1)
    while j > i_star and d[j] > d_max:
        j -= 1
    return i_star, j


def localize_and_select(
    distance_fn: DistanceFn, context: np.ndarray, topomap: TopoMap,
    lookahead: int = DEFAULT_LOOKAHEAD, d_max: float = DEFAULT_D_MAX,
) -> tuple[int, int]:
    return select_subgoal(distance_fn(context, topomap.rasters()), lookahead, d_max)


def model_distance_fn(model) -> DistanceFn:
    """Wrap a policy model so every map node is scored in one batched query."""
    from hxe.policy.model import predict_distance

    def fn(context, nodes):
        ctx = np.broadcast_to(context, (len(nodes),) + context.shape)
        return predict_distance(model, ctx, nodes)

    return fn


def pose_distance_fn(get_pose: Callable[[], Pose], node_poses: list[Pose], step_length: float) -> DistanceFn:
    """Ground-truth stand-in: Euclidean distance to each node in units of one recorded step."""
    xy = np.array([[p.x, p.y] for p in node_poses])

    def fn(context, nodes):
        p = get_pose()
        return np.hypot(xy[:, 0] - p.x, xy[:, 1] - p.y) / max(step_length, 1e-9)

    return fn


def waypoint_to(pose: Pose, target: Pose) -> tuple[float, float]:
    """Egocentric (forward, left) of ``target`` seen from ``pose``."""
    dx, dy = target.x - pose.x, target.y - pose.y
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    return c * dx + s * dy, -s * dx + c * dy
