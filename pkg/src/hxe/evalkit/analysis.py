"""Linear probes from policy embeddings to temporal distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hxe.core import Episode
from hxe.datapipe.labels import context_indices, sample_goal

RIDGE_LAMBDA = 1e-6
MIN_PAIRS = 100


@dataclass(frozen=True)
class ProbeResult:
    target: str
    r2: float
    n_train: int
    n_test: int
    ridge: bool


def _standardize(X_train: np.ndarray, X_test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = X_train.mean(axis=0)
    sd = X_train.std(axis=0)
    keep = sd > 1e-12 * max(1.0, float(np.abs(mu).max(initial=0.0)))
    return (X_train[:, keep] - mu[keep]) / sd[keep], (X_test[:, keep] - mu[keep]) / sd[keep]


def ols_r2(X_train, y_train, X_test, y_test) -> tuple[float, bool]:
    """Held-out R^2 of an intercept + linear fit. Returns (r2, ridge_used).

    Features are z-scored with training statistics first, which makes the estimate
    invariant to feature scaling. A rank-deficient design falls back to ridge.
    """
    X_train, X_test = np.asarray(X_train, float), np.asarray(X_test, float)
    y_train, y_test = np.asarray(y_train, float), np.asarray(y_test, float)
    if X_train.ndim == 1:
        X_train, X_test = X_train[:, None], X_test[:, None]
    Z_train, Z_test = _standardize(X_train, X_test)
    y_mu = y_train.mean()
    ridge = Z_train.shape[1] == 0 or np.linalg.matrix_rank(Z_train) < Z_train.shape[1]
    if Z_train.shape[1] == 0:
        w = np.zeros(0)
    elif ridge:
        A = Z_train.T @ Z_train + RIDGE_LAMBDA * np.eye(Z_train.shape[1])
        w = np.linalg.solve(A, Z_train.T @ (y_train - y_mu))
    else:
        w = np.linalg.lstsq(Z_train, y_train - y_mu, rcond=None)[0]
    pred = Z_test @ w + y_mu
    ss_res = float(np.sum((y_test - pred) ** 2))
    ss_tot = float(np.sum((y_test - y_test.mean()) ** 2))
    return (1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0), bool(ridge)


def distance_pairs(episodes: list[Episode], rng: np.random.Generator, per_episode: int = 8, context: int = 3):
    """(context, goal, temporal distance, metric distance, episode index) tuples with relabeled goals."""
    ctx, goals, dist, metric, owner = [], [], [], [], []
    for e, ep in enumerate(episodes):
        obs = ep.obs_array()
        for _ in range(per_episode):
            t = int(rng.integers(ep.length - 1))
            g = sample_goal(ep.length, t, rng)
            ctx.append(obs[context_indices(t, context)])
            goals.append(obs[g])
            dist.append(g - t)
            p, q = ep.poses[t], ep.poses[g]
            metric.append(math.hypot(q.x - p.x, q.y - p.y))
            owner.append(e)
    return np.stack(ctx), np.stack(goals), np.array(dist, float), np.array(metric), np.array(owner)


PROBE_TARGETS = ("temporal_distance", "metric_distance")


def embedding_r2(model, episodes: list[Episode], split: float = 0.5, seed: int = 0,
                 per_episode: int = 8) -> list[ProbeResult]:
    """Fit probes on pairs from the first ``split`` fraction of episodes, score on the rest."""
    from hxe.policy.model import embed

    if not 0.0 < split < 1.0:
        raise ValueError(f"split must be in (0, 1), got {split}")
    rng = np.random.default_rng(seed)
    ctx, goals, dist, metric, owner = distance_pairs(episodes, rng, per_episode, model.cfg.context)
    if len(dist) < MIN_PAIRS:
        raise ValueError(f"need at least {MIN_PAIRS} (embedding, distance) pairs, got {len(dist)}")
    feats = np.concatenate([embed(model, ctx[i : i + 256], goals[i : i + 256]) for i in range(0, len(ctx), 256)])
    n_train_eps = max(1, min(len(episodes) - 1, int(round(split * len(episodes)))))
    train = owner < n_train_eps
    out = []
    for name, y in zip(PROBE_TARGETS, (dist, metric)):
        r2, ridge = ols_r2(feats[train], y[train], feats[~train], y[~train])
        out.append(ProbeResult(name, r2, int(train.sum()), int((~train).sum()), ridge))
    return out
