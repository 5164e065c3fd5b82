"""Dataset-mixture ablations and the goal-conditioning ablation."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from hxe.core import ConfigError, Episode
from hxe.datapipe.manifest import DatasetManifest
from hxe.datapipe.mixture import MixtureSampler
from hxe.evalkit.agents import ModelAgent
from hxe.evalkit.metrics import EvalReport, run_task
from hxe.policy.model import PolicyConfig, PolicyModel
from hxe.policy.train import TrainConfig, train_policy
from hxe.simworld.tasks import TaskSpec

log = logging.getLogger(__name__)

Dataset = tuple[DatasetManifest, list[Episode]]


@dataclass(frozen=True)
class MixtureSpec:
    name: str
    datasets: tuple[str, ...]
    domain_shares: dict | None = None

    def shares_for(self, datasets: dict[str, Dataset]) -> dict[str, float]:
        """Configured shares, or 50/50 over whichever domains the mixture actually contains."""
        if self.domain_shares is not None:
            return dict(self.domain_shares)
        doms = sorted({datasets[d][0].domain for d in self.datasets})
        return {d: 1.0 / len(doms) for d in doms}


@dataclass
class AblationTable:
    reports: list[EvalReport] = field(default_factory=list)
    partial: bool = False
    error: str = ""

    def rows(self) -> list[dict]:
        return [r.row() for r in self.reports]

    def mean(self, mixture: str, task: str) -> float:
        vals = [r.score for r in self.reports if r.mixture == mixture and r.task == task]
        return float(np.mean(vals)) if vals else float("nan")

    def by_seed(self, mixture: str, task: str) -> dict[int, float]:
        return {r.seed: r.score for r in self.reports if r.mixture == mixture and r.task == task}


def train_on(datasets: list[Dataset], shares: dict[str, float], train_cfg: TrainConfig, seed: int,
             model_cfg: PolicyConfig | None = None, csv_path=None) -> PolicyModel:
    model_cfg = model_cfg or PolicyConfig()
    sampler = MixtureSampler(datasets, seed=seed, domain_shares=shares, context=model_cfg.context,
                             horizon=model_cfg.horizon)
    model = PolicyModel(model_cfg, seed=seed)
    train_policy(model, sampler, replace(train_cfg, seed=seed), csv_path)
    return model


def _cell(args) -> list[EvalReport]:
    mix, seed, datasets, train_cfg, model_cfg, tasks, trials = args
    chosen = [datasets[d] for d in mix.datasets]
    model = train_on(chosen, mix.shares_for(datasets), train_cfg, seed, model_cfg)
    agent = ModelAgent(model, [m for m, _ in chosen])
    return [run_task(agent, t, trials, seed, mixture=mix.name, goal_conditioned=model_cfg.goal_conditioned)
            for t in tasks]


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("HXE_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, requested or cap))


def ablation_run(
    mixtures: list[MixtureSpec], datasets: dict[str, Dataset], train_cfg: TrainConfig, tasks: list[TaskSpec],
    seeds: list[int], trials: int = 20, model_cfg: PolicyConfig | None = None, workers: int | None = 1,
) -> AblationTable:
    """Fresh model per (mixture, seed), trained with the same budget and evaluated on every task.

    A failing cell stops the sweep; the table keeps finished cells and is marked partial.
    """
    model_cfg = model_cfg or PolicyConfig()
    for mix in mixtures:
        missing = [d for d in mix.datasets if d not in datasets]
        if missing:
            raise ConfigError(f"mixture {mix.name!r} references unknown datasets {missing}")
    cells = [(mix, seed, datasets, train_cfg, model_cfg, tasks, trials) for mix in mixtures for seed in seeds]
    table = AblationTable()
    n = worker_count(workers)
    if n == 1:
        for cell in cells:
            try:
                table.reports.extend(_cell(cell))
            except Exception as exc:  # noqa: BLE001 - any failure ends the sweep with a marker
                log.exception("ablation cell %s/seed %d failed", cell[0].name, cell[1])
                table.partial, table.error = True, f"{cell[0].name} seed {cell[1]}: {exc}"
                break
        return table
    with ProcessPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(_cell, c) for c in cells]
        for cell, fut in zip(cells, futures):
            try:
                table.reports.extend(fut.result())
            except Exception as exc:  # noqa: BLE001
                table.partial, table.error = True, f"{cell[0].name} seed {cell[1]}: {exc}"
                for f in futures:
                    f.cancel()
                break
    return table


def goal_conditioning_ablation(
    datasets: list[Dataset], train_cfg: TrainConfig, tasks: list[TaskSpec], seed: int = 0, trials: int = 20,
    model_cfg: PolicyConfig | None = None,
) -> list[tuple[EvalReport, EvalReport]]:
    """Pairs of (goal-conditioned, unconditioned) reports per task.

    The unconditioned variant sees an all-zero goal raster. GC runs are scored on
    grasping the goal object and UC runs on grasping any object.
    """
    for t in tasks:
        if t.domain != "manipulation" or t.embodiment_kind != "manipulator":
            raise ConfigError(f"goal-conditioning ablation needs reach tasks, got {t.name}")
    model_cfg = model_cfg or PolicyConfig()
    doms = sorted({m.domain for m, _ in datasets})
    shares = {d: 1.0 / len(doms) for d in doms}
    manifests = [m for m, _ in datasets]
    out = {}
    for gc in (True, False):
        cfg = replace(model_cfg, goal_conditioned=gc)
        model = train_on(datasets, shares, train_cfg, seed, cfg)
        agent = ModelAgent(model, manifests)
        out[gc] = [run_task(agent, t, trials, seed, mixture="GC" if gc else "UC", goal_conditioned=gc) for t in tasks]
    return list(zip(out[True], out[False]))
