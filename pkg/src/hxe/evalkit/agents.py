"""Things that choose actions during evaluation rollouts.

An agent sees egocentric observation histories and goal rasters for a batch of
live trials and returns unified action blocks (B, n, 7). Oracle agents may also
read simulator-side facts through :class:`TrialView`; learned agents ignore them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hxe.control.actuation import NAV_GAINS, STOP_RADIUS
from hxe.control.decode import ActionDecoder
from hxe.control.topomap import waypoint_to
from hxe.core import DT, UNIFIED_DIM, ConfigError, Episode, Pose2D
from hxe.datapipe.alignment import alignment_for
from hxe.datapipe.manifest import DatasetManifest
from hxe.datapipe.normalize import NormStats
from hxe.simworld.embodiments import domain_of, get_profile
from hxe.simworld.expert import scripted_expert
from hxe.simworld.tasks import TaskInstance


@dataclass
class TrialView:
    index: int
    instance: TaskInstance
    pose: Pose2D
    t: int = 0
    subgoal_pose: Pose2D | None = None
    extra: dict = field(default_factory=dict)


def pick_manifest(manifests: list[DatasetManifest], embodiment_id: str) -> DatasetManifest:
    """The heaviest training dataset recorded with this embodiment (ties: smallest id)."""
    matches = [m for m in manifests if m.embodiment_id == embodiment_id]
    if not matches:
        have = sorted({m.embodiment_id for m in manifests})
        raise ConfigError(f"model has no training data for embodiment {embodiment_id!r} (has {have})")
    return sorted(matches, key=lambda m: (-m.weight, m.dataset_id))[0]


def profile_manifest(embodiment_id: str, lo, hi) -> DatasetManifest:
    """A data-free manifest with explicit bounds, for scripted agents."""
    profile = get_profile(embodiment_id)
    return DatasetManifest(
        f"scripted-{embodiment_id}", embodiment_id, 0, (16, 16, 2), profile.convention,
        alignment_for(profile), NormStats(np.asarray(lo, float), np.asarray(hi, float)), 0.0, domain_of(profile),
    )


class Agent:
    nav_row: int = -1
    nav_gains: tuple[float, float] = NAV_GAINS
    uses_distance_head: bool = False

    def decoder_for(self, embodiment_id: str) -> ActionDecoder:
        raise NotImplementedError

    def act(self, context: np.ndarray, goals: np.ndarray, views: list[TrialView], rng) -> np.ndarray:
        raise NotImplementedError

    def distances(self, context: np.ndarray, nodes: list[np.ndarray], views: list[TrialView]) -> list[np.ndarray]:
        raise NotImplementedError(f"{type(self).__name__} cannot localize against a map")


class ModelAgent(Agent):
    uses_distance_head = True

    def __init__(self, model, manifests: list[DatasetManifest]):
        self.model = model
        self.manifests = list(manifests)

    def decoder_for(self, embodiment_id: str) -> ActionDecoder:
        return ActionDecoder(pick_manifest(self.manifests, embodiment_id))

    def act(self, context, goals, views, rng):
        from hxe.policy.model import sample_actions

        return sample_actions(self.model, context, goals, rng)

    def distances(self, context, nodes, views):
        from hxe.policy.model import predict_distance

        sizes = [len(n) for n in nodes]
        ctx = np.repeat(context, sizes, axis=0)
        d = predict_distance(self.model, ctx, np.concatenate(nodes))
        return np.split(d, np.cumsum(sizes)[:-1])


class RandomAgent(Agent):
    """Uniform unified actions decoded with the given manifests."""

    def __init__(self, manifests: list[DatasetManifest], horizon: int = 5):
        self.manifests = list(manifests)
        self.horizon = horizon

    def decoder_for(self, embodiment_id):
        return ActionDecoder(pick_manifest(self.manifests, embodiment_id))

    def act(self, context, goals, views, rng):
        return rng.uniform(-1.0, 1.0, size=(len(context), self.horizon, UNIFIED_DIM))

    def distances(self, context, nodes, views):
        return [np.random.default_rng(v.index * 7919 + v.t).uniform(0, 40, size=len(n)) for v, n in zip(views, nodes)]


class ExpertReplayAgent(Agent):
    """Replays the scripted expert's demonstration for each trial, step by step."""

    def __init__(self, embodiment_id: str, horizon: int = 5):
        self.embodiment_id = embodiment_id
        self.horizon = horizon
        self.profile = get_profile(embodiment_id)
        self._eps: dict[int, Episode] = {}
        bound = np.ones(self.profile.action_dim)
        self.manifest = profile_manifest(embodiment_id, -bound, bound)

    def decoder_for(self, embodiment_id):
        if embodiment_id != self.embodiment_id:
            raise ConfigError(f"expert replays {self.embodiment_id}, asked for {embodiment_id}")
        return ActionDecoder(self.manifest)

    def episode(self, view: TrialView) -> Episode:
        if view.index not in self._eps:
            self._eps[view.index] = scripted_expert(view.instance, self.profile, seed=view.index)
        return self._eps[view.index]

    def act(self, context, goals, views, rng):
        from hxe.datapipe.labels import unified_labels

        out = np.empty((len(views), self.horizon, UNIFIED_DIM))
        for b, v in enumerate(views):
            ep = self.episode(v)
            t = min(v.t, ep.length - 2)
            out[b] = unified_labels(ep, t, self.manifest, self.horizon)
        return out


class NavOracleAgent(Agent):
    """Ground-truth localization (pose distance to nodes) and a waypoint straight at the subgoal."""

    def __init__(self, step_length: float, lookahead: int = 2, embodiment_id: str = "nav_a"):
        self.step_length = step_length
        self.nav_gains = (1.0 / (lookahead * DT), 1.5)
        self.embodiment_id = embodiment_id
        self.manifest = profile_manifest(embodiment_id, [-4.0, -4.0], [4.0, 4.0])
        self.decoder = ActionDecoder(self.manifest)

    def decoder_for(self, embodiment_id):
        return self.decoder

    def act(self, context, goals, views, rng):
        rows = []
        for v in views:
            # nodes recorded while turning nearly coincide; aim at the first one far enough to move toward
            poses = v.extra["node_poses"]
            k = v.extra["subgoal"]
            while k < len(poses) - 1 and math.hypot(poses[k].x - v.pose.x, poses[k].y - v.pose.y) < 2 * STOP_RADIUS:
                k += 1
            fwd, left = waypoint_to(v.pose, poses[k])
            rows.append(self.decoder.encode_physical(np.array([fwd, left])))
        return np.repeat(np.stack(rows)[:, None, :], 5, axis=1)

    def distances(self, context, nodes, views):
        out = []
        for v in views:
            xy = np.array([[p.x, p.y] for p in v.extra["node_poses"]])
            out.append(np.hypot(xy[:, 0] - v.pose.x, xy[:, 1] - v.pose.y) / self.step_length)
        return out
