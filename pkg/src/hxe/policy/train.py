"""Training objective and loop."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hxe.datapipe.labels import TrainingSample
from hxe.datapipe.mixture import Batch, MixtureSampler
from hxe.nnet import tensor as T
from hxe.nnet.optim import Adam, cosine_lr
from hxe.nnet.tensor import Tensor
from hxe.policy.model import PolicyModel

log = logging.getLogger(__name__)

DISTANCE_WEIGHT = 0.001
LOSS_CSV_HEADER = ("step", "lr", "loss_total", "loss_diff", "loss_dist")


def as_batch(x: Batch | TrainingSample) -> Batch:
    if isinstance(x, Batch):
        return x
    return Batch(x.context[None], x.goal[None], x.actions[None], np.array([x.distance]), np.array([x.domain]))


def combine_losses(l_diff, l_dist, lam: float = DISTANCE_WEIGHT):
    return l_diff + lam * l_dist


def diffusion_terms(model: PolicyModel, f: Tensor, actions: np.ndarray, k: np.ndarray, eps: np.ndarray) -> Tensor:
    """Per-row ||eps - eps_hat||^2 for given steps and noise, shape (B,)."""
    a0 = actions.reshape(len(actions), -1)
    x_k = model.schedule.add_noise(a0, k, eps)
    return T.square_error(model.predict_eps(f, x_k, k), eps.astype(model.dtype))


def distance_terms(model: PolicyModel, f: Tensor, distance: np.ndarray) -> Tensor:
    target = np.asarray(distance, dtype=model.dtype).reshape(-1, 1)
    return T.square_error(model.predict_distance_features(f), target)


def draw_noise(model: PolicyModel, batch_size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    k = rng.integers(0, model.schedule.K, size=batch_size)
    eps = rng.standard_normal((batch_size, model.cfg.action_size))
    return k, eps


def diffusion_loss(model: PolicyModel, sample, rng: np.random.Generator) -> Tensor:
    b = as_batch(sample)
    f = model.encode(b.context, b.goal)
    k, eps = draw_noise(model, len(b), rng)
    return T.mean(diffusion_terms(model, f, b.actions, k, eps))


def distance_loss(model: PolicyModel, sample) -> Tensor:
    b = as_batch(sample)
    return T.mean(distance_terms(model, model.encode(b.context, b.goal), b.distance))


def loss_components(model: PolicyModel, batch, rng: np.random.Generator) -> tuple[Tensor, Tensor]:
    """Batch means of the diffusion and distance losses sharing one encoder pass."""
    b = as_batch(batch)
    f = model.encode(b.context, b.goal)
    k, eps = draw_noise(model, len(b), rng)
    return T.mean(diffusion_terms(model, f, b.actions, k, eps)), T.mean(distance_terms(model, f, b.distance))


def total_loss(model: PolicyModel, batch, rng: np.random.Generator, lam: float = DISTANCE_WEIGHT) -> Tensor:
    l_diff, l_dist = loss_components(model, batch, rng)
    return combine_losses(l_diff, l_dist, lam)


@dataclass
class TrainConfig:
    steps: int = 3000
    batch_size: int = 64
    lr_max: float = 1e-4
    distance_weight: float = DISTANCE_WEIGHT
    seed: int = 0


def train_policy(
    model: PolicyModel, sampler: MixtureSampler, cfg: TrainConfig, csv_path=None
) -> list[tuple[int, float, float, float, float]]:
    """Adam with a cosine schedule; one loss row per step, optionally written to CSV."""
    rng = np.random.default_rng([cfg.seed, 1])
    opt = Adam(model.parameters(), lr=cfg.lr_max)
    rows = []
    for step in range(cfg.steps):
        lr = cosine_lr(step, cfg.steps, cfg.lr_max)
        batch = sampler.batch(cfg.batch_size)
        l_diff, l_dist = loss_components(model, batch, rng)
        loss = combine_losses(l_diff, l_dist, cfg.distance_weight)
        opt.zero_grad()
        loss.backward()
        opt.step(lr)
        rows.append((step, lr, loss.item(), l_diff.item(), l_dist.item()))
        if step % 500 == 0:
            log.info("step %d lr %.2e loss %.4f (diff %.4f, dist %.2f)", *rows[-1])
    if csv_path is not None:
        write_loss_csv(csv_path, rows)
    return rows


def write_loss_csv(path, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOSS_CSV_HEADER)
        for step, lr, tot, dif, dist in rows:
            w.writerow([step, f"{lr:.8e}", f"{tot:.8e}", f"{dif:.8e}", f"{dist:.8e}"])
