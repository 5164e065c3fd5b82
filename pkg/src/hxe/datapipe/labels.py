"""Training-sample construction: waypoint labels, goal relabeling, distance labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hxe.core import UNIFIED_DIM, ConfigError, Episode, Pose
from hxe.datapipe.manifest import DatasetManifest
from hxe.datapipe.normalize import normalize_action
from hxe.simworld.embodiments import get_profile
from hxe.simworld.expert import native_to_physical, physical_to_native

GOAL_MIN_OFFSET = 20
GOAL_MAX_OFFSET = 40
DEFAULT_CONTEXT = 3


@dataclass(frozen=True)
class TrainingSample:
    context: np.ndarray  # (c, H, W, C); the last frame is the current observation
    goal: np.ndarray  # (H, W, C)
    actions: np.ndarray  # (n, 7) unified
    distance: float
    domain: str

    @property
    def current(self) -> np.ndarray:
        return self.context[-1]


def egocentric_waypoints(poses: list[Pose], t: int, horizon: int = 5) -> np.ndarray:
    """Next ``horizon`` positions relative to pose t, rotated into its heading frame.

    Returns (horizon, 2) rows of (forward, left). Past the end the final pose repeats.
    """
    T = len(poses)
    if not 0 <= t < T:
        raise IndexError(f"t={t} outside episode of length {T}")
    p = poses[t]
    c, s = math.cos(p.yaw), math.sin(p.yaw)
    out = np.empty((horizon, 2))
    for k in range(horizon):
        q = poses[min(t + 1 + k, T - 1)]
        dx, dy = q.x - p.x, q.y - p.y
        out[k] = (c * dx + s * dy, -s * dx + c * dy)
    return out


def sample_goal(T: int, t: int, rng: np.random.Generator) -> int:
    if not 0 <= t <= T - 2:
        raise ValueError(f"cannot sample a goal after t={t} in an episode of length {T}")
    room = T - 1 - t
    lo, hi = min(GOAL_MIN_OFFSET, room), min(GOAL_MAX_OFFSET, room)
    return t + int(rng.integers(lo, hi + 1))


def hold_action(ep: Episode, convention: str) -> np.ndarray:
    """Zero motion, gripper held at its final commanded state (native layout)."""
    if convention == "manip_cart7":
        profile = get_profile(ep.embodiment_id)
        phys = native_to_physical(ep.raw_actions[-1].astype(np.float64), profile)
        held = np.zeros(7)
        held[6] = phys[6]
        return physical_to_native(held, profile)
    return np.zeros(ep.action_dim)


def label_rows(ep: Episode, t: int, n: int, convention: str) -> np.ndarray:
    """Native-unit action labels (n, d) for step t.

    Navigation labels are the egocentric waypoints of the next n poses. Other
    conventions use raw_actions[t:t+n], tail-padded with hold actions.
    """
    if convention == "nav_fwd_left":
        return egocentric_waypoints(ep.poses, t, n)
    rows = ep.raw_actions[t : t + n].astype(np.float64)
    if len(rows) < n:
        pad = np.tile(hold_action(ep, convention), (n - len(rows), 1))
        rows = np.concatenate([rows, pad])
    return rows


def unified_labels(ep: Episode, t: int, manifest: DatasetManifest, n: int) -> np.ndarray:
    raw = label_rows(ep, t, n, manifest.convention)
    norm = normalize_action(raw, manifest.norm.lo, manifest.norm.hi)
    out = manifest.alignment.apply(norm)
    return np.clip(out, -1.0, 1.0)


def context_indices(t: int, c: int) -> list[int]:
    return [max(0, i) for i in range(t - c + 1, t + 1)]


def make_sample(
    ep: Episode, t: int, g: int, manifests: dict[str, DatasetManifest], c: int = DEFAULT_CONTEXT, n: int = 5
) -> TrainingSample:
    if ep.dataset_id not in manifests:
        raise ConfigError(f"no manifest for dataset {ep.dataset_id!r}")
    m = manifests[ep.dataset_id]
    if not 0 <= t < g <= ep.length - 1:
        raise ValueError(f"need 0 <= t < g <= T-1, got t={t}, g={g}, T={ep.length}")
    ctx = np.stack([ep.observations[i].raster for i in context_indices(t, c)])
    return TrainingSample(ctx, ep.observations[g].raster, unified_labels(ep, t, m, n), float(g - t), m.domain)


class EpisodeCache:
    """Per-episode arrays precomputed once so batches are plain fancy-indexing."""

    def __init__(self, ep: Episode, manifest: DatasetManifest, n: int):
        self.length = ep.length
        self.obs = ep.obs_array()
        self.labels = np.stack([unified_labels(ep, t, manifest, n) for t in range(ep.length - 1)]).astype(np.float32)
        assert self.labels.shape[1:] == (n, UNIFIED_DIM)
