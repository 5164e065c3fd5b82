"""Per-task evaluation reports and scoring."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from hxe.evalkit.agents import Agent, ExpertReplayAgent, ModelAgent, NavOracleAgent, RandomAgent
from hxe.evalkit.rollout import TrialResult, rollout
from hxe.simworld.tasks import TaskSpec


def score_trial(result: TrialResult, goal_conditioned: bool = True) -> bool:
    """Goal-conditioned runs must grasp the object shown in the goal image; unconditioned runs any object."""
    return result.success if goal_conditioned else result.any_object


def _sha(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def agent_fingerprint(agent: Agent) -> str:
    if isinstance(agent, ModelAgent):
        h = hashlib.sha256()
        for name, p in agent.model.named_parameters():
            h.update(name.encode())
            h.update(np.ascontiguousarray(p.data, dtype="<f4").tobytes())
        h.update(json.dumps(agent.model.cfg.to_json(), sort_keys=True).encode())
        for m in sorted(agent.manifests, key=lambda m: m.dataset_id):
            d = m.to_json()
            d.pop("episode_meta", None)
            h.update(json.dumps(d, sort_keys=True).encode())
        return h.hexdigest()
    if isinstance(agent, ExpertReplayAgent):
        return _sha({"agent": "expert", "embodiment": agent.embodiment_id})
    if isinstance(agent, NavOracleAgent):
        return _sha({"agent": "nav_oracle", "step": agent.step_length, "gains": list(agent.nav_gains)})
    if isinstance(agent, RandomAgent):
        return _sha({"agent": "random", "manifests": sorted(m.dataset_id for m in agent.manifests)})
    return _sha({"agent": type(agent).__name__})


def task_config(task: TaskSpec) -> dict:
    return {"name": task.name, "seed": task.seed, "tolerance": task.tolerance,
            "max_steps": task.max_steps, "collision_budget": task.collision_budget}


@dataclass
class EvalReport:
    task: str
    seed: int
    trials: int
    success: float
    collisions: float
    any_object: float
    fingerprint: str
    mixture: str = ""
    goal_conditioned: bool = True
    results: list[TrialResult] = field(default_factory=list, repr=False)

    @property
    def score(self) -> float:
        """Success under the metric matching how the model was conditioned."""
        return self.success if self.goal_conditioned else self.any_object

    def row(self) -> dict:
        return {"mixture": self.mixture, "seed": self.seed, "task": self.task, "success": self.success,
                "collisions": self.collisions, "trials": self.trials}

    def to_json(self) -> dict:
        d = self.row()
        d.update({"any_object": self.any_object, "fingerprint": self.fingerprint,
                  "goal_conditioned": self.goal_conditioned, "per_trial": [r.to_json() for r in self.results]})
        return d


def summarize(results: list[TrialResult], task: TaskSpec, seed: int, fingerprint: str,
              mixture: str = "", goal_conditioned: bool = True) -> EvalReport:
    n = len(results)
    return EvalReport(
        task.name, seed, n,
        sum(r.success for r in results) / n,
        sum(r.collisions for r in results) / n,
        sum(r.any_object for r in results) / n,
        fingerprint, mixture, goal_conditioned, results,
    )


def run_task(agent: Agent, task: TaskSpec, trials: int = 20, seed: int = 0, embodiment_id: str | None = None,
             mixture: str = "", goal_conditioned: bool = True, **rollout_kw) -> EvalReport:
    """Closed-loop trials 0..trials-1 of ``task``; ``seed`` drives the agent's sampling noise."""
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    rng = np.random.default_rng([seed, 0x5EED])
    results = rollout(agent, task, list(range(trials)), rng, embodiment_id, **rollout_kw)
    fp = _sha({"agent": agent_fingerprint(agent), "task": task_config(task), "trials": trials, "seed": seed,
               "embodiment": embodiment_id})
    return summarize(results, task, seed, fp, mixture, goal_conditioned)
