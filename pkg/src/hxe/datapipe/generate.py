"""Expert demonstration datasets from simulated worlds."""

from __future__ import annotations

import logging

import numpy as np

from hxe.core import ConfigError, Episode
from hxe.datapipe.manifest import DatasetManifest, build_manifest
from hxe.simworld.embodiments import get_profile
from hxe.simworld.expert import PlanningError, scripted_expert
from hxe.simworld.tasks import training_instance

log = logging.getLogger(__name__)

MAX_RETRIES_PER_EPISODE = 20


def generate_episodes(world_kind: str, embodiment_id: str, n: int, seed: int, dataset_id: str) -> list[Episode]:
    if n <= 0:
        raise ConfigError(f"episode count must be positive, got {n}")
    profile = get_profile(embodiment_id)
    episodes: list[Episode] = []
    failures = 0
    k = 0
    while len(episodes) < n:
        rng = np.random.default_rng([seed, k])
        try:
            inst = training_instance(world_kind, rng, seed * 1_000_003 + k)
            ep = scripted_expert(inst, profile, seed=int(rng.integers(2**31)), dataset_id=dataset_id)
        except (PlanningError, RuntimeError) as exc:
            failures += 1
            log.debug("instance %d rejected: %s", k, exc)
            if failures > MAX_RETRIES_PER_EPISODE * n:
                raise PlanningError(f"{failures} infeasible tasks while generating {n} episodes") from exc
        else:
            if ep.length >= 2:
                episodes.append(ep)
        k += 1
    return episodes


def generate_dataset(
    world_kind: str, embodiment_id: str, n: int, seed: int, dataset_id: str | None = None, weight: float | None = None
) -> tuple[DatasetManifest, list[Episode]]:
    dataset_id = dataset_id or f"{world_kind}-{embodiment_id}"
    episodes = generate_episodes(world_kind, embodiment_id, n, seed, dataset_id)
    return build_manifest(dataset_id, episodes, weight), episodes


