"""Weighted domain/dataset mixture sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from hxe.core import ConfigError, Episode
from hxe.datapipe.labels import DEFAULT_CONTEXT, EpisodeCache, TrainingSample, context_indices, make_sample, sample_goal
from hxe.datapipe.manifest import DatasetManifest

DOMAINS = ("navigation", "manipulation")
DEFAULT_SHARES = {"navigation": 0.5, "manipulation": 0.5}


@dataclass
class Batch:
    context: np.ndarray  # (B, c, H, W, C)
    goal: np.ndarray  # (B, H, W, C)
    actions: np.ndarray  # (B, n, 7)
    distance: np.ndarray  # (B,)
    domain: np.ndarray  # (B,) of str

    def __len__(self) -> int:
        return len(self.distance)


class MixtureSampler:
    """Domain first (by share), then dataset by manifest weight, episode and step uniformly.

    Single-owner and stateful; give each worker its own seed.
    """

    def __init__(
        self,
        datasets: list[tuple[DatasetManifest, list[Episode]]],
        seed: int = 0,
        domain_shares: dict[str, float] | None = None,
        context: int = DEFAULT_CONTEXT,
        horizon: int = 5,
    ):
        shares = dict(DEFAULT_SHARES if domain_shares is None else domain_shares)
        unknown = set(shares) - set(DOMAINS)
        if unknown:
            raise ConfigError(f"unknown domains in shares: {sorted(unknown)}")
        if any(v < 0 for v in shares.values()) or sum(shares.values()) <= 0:
            raise ConfigError(f"domain shares must be >= 0 and not all zero: {shares}")
        self.rng = np.random.default_rng(seed)
        self.context = context
        self.horizon = horizon
        self.manifests = {m.dataset_id: m for m, _ in datasets}
        self.episodes = {m.dataset_id: eps for m, eps in datasets}
        self.domains: list[str] = []
        self.domain_p: list[float] = []
        self.by_domain: dict[str, tuple[list[str], np.ndarray]] = {}
        for dom in DOMAINS:
            share = shares.get(dom, 0.0)
            if share <= 0:
                continue
            ids = [m.dataset_id for m, eps in datasets if m.domain == dom and m.weight > 0 and eps]
            if not ids:
                raise ConfigError(f"domain {dom!r} has share {share} but no dataset with positive weight")
            w = np.array([self.manifests[i].weight for i in ids], dtype=np.float64)
            self.by_domain[dom] = (ids, w / w.sum())
            self.domains.append(dom)
            self.domain_p.append(share)
        p = np.array(self.domain_p)
        self.domain_p = list(p / p.sum())
        self._cache: dict[tuple[str, int], EpisodeCache] = {}

    def draw_index(self) -> tuple[str, int, int, int]:
        """(dataset_id, episode index, t, goal index)."""
        dom = self.domains[self.rng.choice(len(self.domains), p=self.domain_p)] if len(self.domains) > 1 else self.domains[0]
        ids, w = self.by_domain[dom]
        ds = ids[self.rng.choice(len(ids), p=w)] if len(ids) > 1 else ids[0]
        eps = self.episodes[ds]
        e = int(self.rng.integers(len(eps)))
        T = eps[e].length
        t = int(self.rng.integers(T - 1))
        g = sample_goal(T, t, self.rng)
        return ds, e, t, g

    def __iter__(self) -> Iterator[TrainingSample]:
        while True:
            yield self.sample()

    def sample(self) -> TrainingSample:
        ds, e, t, g = self.draw_index()
        return make_sample(self.episodes[ds][e], t, g, self.manifests, self.context, self.horizon)

    def _cached(self, ds: str, e: int) -> EpisodeCache:
        key = (ds, e)
        if key not in self._cache:
            self._cache[key] = EpisodeCache(self.episodes[ds][e], self.manifests[ds], self.horizon)
        return self._cache[key]

    def batch(self, size: int) -> Batch:
        """Same draws as ``size`` calls to ``sample`` but assembled from cached arrays."""
        ctx, goals, acts, dist, dom = [], [], [], [], []
        for _ in range(size):
            ds, e, t, g = self.draw_index()
            cache = self._cached(ds, e)
            ctx.append(cache.obs[context_indices(t, self.context)])
            goals.append(cache.obs[g])
            acts.append(cache.labels[t])
            dist.append(g - t)
            dom.append(self.manifests[ds].domain)
        return Batch(
            np.stack(ctx), np.stack(goals), np.stack(acts), np.asarray(dist, dtype=np.float64), np.asarray(dom)
        )
