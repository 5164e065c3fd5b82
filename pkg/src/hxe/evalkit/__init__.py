"""Evaluation: closed-loop task rollouts, ablations, embedding probes, reports."""

from hxe.evalkit.ablation import AblationTable, MixtureSpec, ablation_run, goal_conditioning_ablation, train_on
from hxe.evalkit.agents import Agent, ExpertReplayAgent, ModelAgent, NavOracleAgent, RandomAgent, TrialView
from hxe.evalkit.analysis import ProbeResult, embedding_r2, ols_r2
from hxe.evalkit.metrics import EvalReport, run_task, score_trial
from hxe.evalkit.report import REPORT_SCHEMA, emit_report, validate_report
from hxe.evalkit.rollout import TrialResult, rollout
from hxe.simworld.tasks import TaskSpec

__all__ = [
    "AblationTable", "MixtureSpec", "ablation_run", "goal_conditioning_ablation", "train_on", "Agent",
    "ExpertReplayAgent", "ModelAgent", "NavOracleAgent", "RandomAgent", "TrialView", "ProbeResult",
    "embedding_r2", "ols_r2", "EvalReport", "run_task", "score_trial", "REPORT_SCHEMA", "emit_report",
    "validate_report", "TrialResult", "rollout", "TaskSpec",
]
