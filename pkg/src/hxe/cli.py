"""``hxe`` command line: data generation, training, evaluation, maps, ablations, analysis, reports.

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import click
import jsonschema
import numpy as np

from hxe.core import ConfigError, HxeError, PersistenceError

log = logging.getLogger("hxe")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

_MODEL_PROPS = {
    "context": {"type": "integer", "minimum": 1},
    "horizon": {"type": "integer", "minimum": 1},
    "diffusion_steps": {"type": "integer", "minimum": 1},
    "layers": {"type": "integer", "minimum": 0},
    "heads": {"type": "integer", "minimum": 1},
    "width": {"type": "integer", "minimum": 1},
    "mlp_hidden": {"type": "integer", "minimum": 1},
    "head_hidden": {"type": "integer", "minimum": 1},
    "goal_conditioned": {"type": "boolean"},
}
_TRAIN_PROPS = {
    "steps": {"type": "integer", "minimum": 1},
    "batch_size": {"type": "integer", "minimum": 1},
    "lr_max": {"type": "number", "exclusiveMinimum": 0},
    "schedule": {"const": "cosine"},
    "distance_weight": {"type": "number", "minimum": 0},
}
_SHARES = {"type": "object", "additionalProperties": False,
           "properties": {"navigation": {"type": "number", "minimum": 0}, "manipulation": {"type": "number", "minimum": 0}}}
_TASKS = {"type": "array", "items": {"type": "string"}}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "seed", "datasets", "output"],
    "properties": {
        "version": {"const": 1},
        "seed": {"type": "integer", "minimum": 0},
        "datasets": {
            "type": "array", "minItems": 1,
            "items": {"type": "object", "additionalProperties": False, "required": ["path"],
                      "properties": {"path": {"type": "string"}, "weight": {"type": "number", "minimum": 0}}},
        },
        "domain_shares": _SHARES,
        "model": {"type": "object", "additionalProperties": False, "properties": _MODEL_PROPS},
        "training": {"type": "object", "additionalProperties": False, "properties": _TRAIN_PROPS},
        "tasks": _TASKS,
        "output": {"type": "string"},
    },
}

ABLATE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "seeds", "datasets", "mixtures", "tasks", "output"],
    "properties": {
        "version": {"const": 1},
        "seeds": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "datasets": {"type": "object", "minProperties": 1, "additionalProperties": {"type": "string"}},
        "mixtures": {
            "type": "array", "minItems": 1,
            "items": {"type": "object", "additionalProperties": False, "required": ["name", "datasets"],
                      "properties": {"name": {"type": "string"}, "datasets": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                                     "domain_shares": _SHARES}},
        },
        "model": {"type": "object", "additionalProperties": False, "properties": _MODEL_PROPS},
        "training": {"type": "object", "additionalProperties": False, "properties": _TRAIN_PROPS},
        "tasks": _TASKS,
        "trials": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
    },
}

WORLD_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "kind"],
    "properties": {"version": {"const": 1}, "kind": {"type": "string"}},
}


class ConfigFileError(click.ClickException):
    exit_code = EXIT_CONFIG


def _pointer(err: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def load_config(path: str, schema: dict) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigFileError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigFileError(f"{p}: invalid JSON: {exc}") from None
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigFileError(f"{p}: schema violation at {_pointer(err)}: {err.message}")
    return doc


def _require_path(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ConfigFileError(f"{what} not found: {p}")
    return p


def _model_cfg(doc: dict):
    from hxe.policy.model import PolicyConfig

    return PolicyConfig.from_json(doc.get("model", {}))


def _train_cfg(doc: dict, seed: int):
    from hxe.policy.train import TrainConfig

    t = {k: v for k, v in doc.get("training", {}).items() if k != "schedule"}
    return TrainConfig(seed=seed, **t)


def _task_specs(names: list[str], seed: int):
    from hxe.simworld.tasks import TaskSpec

    try:
        return [TaskSpec(n, seed=seed) for n in names]
    except ConfigError as exc:
        raise ConfigFileError(str(exc)) from None


def _manifest_jsons(manifests) -> list[dict]:
    out = []
    for m in manifests:
        d = m.to_json()
        d.pop("episode_meta", None)
        out.append(d)
    return out


def _load_model(path: str):
    from hxe.datapipe.manifest import DatasetManifest
    from hxe.policy.model import PolicyModel

    p = Path(path)
    if p.is_file() and p.name == "model.hxw":
        p = p.parent
    if not (p / "model.hxw").is_file() or not (p / "model.json").is_file():
        raise ConfigFileError(f"checkpoint not found: {p} (expected model.hxw and model.json)")
    model, meta = PolicyModel.load(p)
    manifests = [DatasetManifest.from_json(d) for d in meta.get("datasets", [])]
    return model, manifests


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Cross-embodiment goal-conditioned policies on simulated robots."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@cli.command("gen-data")
@click.option("--world", required=True, help="World kind name or a JSON world spec file.")
@click.option("--embodiment", required=True, help="Embodiment id, e.g. arm_a or nav_a.")
@click.option("--episodes", "n", required=True, type=int, help="Number of expert episodes.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Dataset directory to write.")
@click.option("--weight", type=float, default=None, help="Mixture weight (default: episode count).")
def gen_data(world: str, embodiment: str, n: int, seed: int, out: str, weight: float | None) -> None:
    """Generate a dataset of scripted expert demonstrations."""
    from hxe.datapipe.generate import generate_dataset
    from hxe.datapipe.io import write_dataset

    kind = world
    if Path(world).is_file():
        kind = load_config(world, WORLD_SCHEMA)["kind"]
    if n <= 0:
        raise ConfigError(f"--episodes must be positive, got {n}")
    manifest, episodes = generate_dataset(kind, embodiment, n, seed, dataset_id=Path(out).name, weight=weight)
    write_dataset(out, manifest, episodes)
    click.echo(f"wrote {n} episodes to {out}")


@cli.command()
@click.option("--config", "config_path", required=True, type=str, help="Run config (JSON).")
def train(config_path: str) -> None:
    """Train a policy; writes model.hxw, model.json and loss.csv."""
    from hxe.datapipe.io import read_dataset
    from hxe.datapipe.mixture import MixtureSampler
    from hxe.policy.model import PolicyModel
    from hxe.policy.train import train_policy

    doc = load_config(config_path, RUN_SCHEMA)
    datasets = []
    for entry in doc["datasets"]:
        _require_path(entry["path"], "dataset")
        m, eps = read_dataset(entry["path"])
        if "weight" in entry:
            m.weight = float(entry["weight"])
        datasets.append((m, eps))
    model_cfg, train_cfg = _model_cfg(doc), _train_cfg(doc, doc["seed"])
    shares = doc.get("domain_shares")
    if shares is None:
        doms = sorted({m.domain for m, _ in datasets})
        shares = {d: 1.0 / len(doms) for d in doms}
    sampler = MixtureSampler(datasets, seed=doc["seed"], domain_shares=shares, context=model_cfg.context,
                             horizon=model_cfg.horizon)
    model = PolicyModel(model_cfg, seed=doc["seed"])
    out = Path(doc["output"])
    out.mkdir(parents=True, exist_ok=True)
    rows = train_policy(model, sampler, train_cfg, out / "loss.csv")
    model.save(out, {"datasets": _manifest_jsons([m for m, _ in datasets]), "seed": doc["seed"],
                     "training": {"steps": train_cfg.steps, "batch_size": train_cfg.batch_size,
                                  "lr_max": train_cfg.lr_max, "schedule": "cosine",
                                  "distance_weight": train_cfg.distance_weight}})
    click.echo(f"trained {train_cfg.steps} steps: loss {rows[0][2]:.4f} -> {rows[-1][2]:.4f}; model in {out}")


@cli.command("eval")
@click.option("--model", "model_path", required=True, help="Checkpoint directory (or its model.hxw).")
@click.option("--tasks", required=True, help="Comma-separated task names.")
@click.option("--trials", default=20, type=int, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--task-seed", default=0, type=int, show_default=True, help="World generator seed.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
def eval_cmd(model_path: str, tasks: str, trials: int, seed: int, task_seed: int, out: str) -> None:
    """Closed-loop evaluation; writes report.json, report.md and trajectory plots."""
    from hxe.evalkit.agents import ModelAgent
    from hxe.evalkit.metrics import run_task
    from hxe.evalkit.report import emit_report

    model, manifests = _load_model(model_path)
    specs = _task_specs([t for t in tasks.split(",") if t], task_seed)
    agent = ModelAgent(model, manifests)
    reports = [run_task(agent, t, trials, seed, mixture="model", goal_conditioned=model.cfg.goal_conditioned) for t in specs]
    emit_report(reports, out)
    for r in reports:
        click.echo(f"{r.task}: success {r.success:.3f}, collisions {r.collisions:.3f} over {r.trials} trials")


@cli.command()
@click.option("--traversal", required=True, help="Episode file (.hxe) or dataset directory.")
@click.option("--episode", default=0, type=int, show_default=True, help="Episode index when --traversal is a dataset.")
@click.option("--stride", default=1, type=int, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def topomap(traversal: str, episode: int, stride: int, out: str) -> None:
    """Build a topological map from a recorded traversal."""
    from hxe.control.topomap import build_topomap
    from hxe.datapipe.io import decode_episode, episode_path, read_manifest

    p = _require_path(traversal, "traversal")
    if p.is_dir():
        manifest = read_manifest(p)
        if not 0 <= episode < manifest.episode_count:
            raise ConfigError(f"--episode {episode} out of range for {manifest.episode_count} episodes")
        ep = decode_episode(episode_path(p, episode).read_bytes(), manifest.dataset_id, manifest.embodiment_id)
        source = f"{manifest.dataset_id}/{episode}"
    else:
        ep = decode_episode(p.read_bytes())
        source = p.stem
    tm = build_topomap(ep, stride, source)
    tm.save(out)
    click.echo(f"topomap with {len(tm)} nodes written to {out}")


@cli.command()
@click.option("--config", "config_path", required=True, type=str, help="Ablation config (JSON).")
def ablate(config_path: str) -> None:
    """Train and evaluate one fresh model per (mixture, seed)."""
    from hxe.datapipe.io import read_dataset
    from hxe.evalkit.ablation import MixtureSpec, ablation_run
    from hxe.evalkit.report import emit_report

    doc = load_config(config_path, ABLATE_SCHEMA)
    datasets = {}
    for did, path in doc["datasets"].items():
        _require_path(path, "dataset")
        m, eps = read_dataset(path)
        datasets[did] = (replace(m, dataset_id=did), [replace(e, dataset_id=did) for e in eps])
    mixes = [MixtureSpec(m["name"], tuple(m["datasets"]), m.get("domain_shares")) for m in doc["mixtures"]]
    tasks = _task_specs(doc["tasks"], 0)
    table = ablation_run(mixes, datasets, _train_cfg(doc, 0), tasks, doc["seeds"], doc.get("trials", 20),
                         _model_cfg(doc), doc.get("workers"))
    if not table.reports:
        raise HxeError(f"ablation produced no results: {table.error}")
    emit_report(table.reports, doc["output"], partial=table.partial)
    click.echo(f"{len(table.reports)} rows written to {doc['output']}")
    if table.partial:
        raise HxeError(f"ablation incomplete: {table.error}")


@cli.command()
@click.option("--model", "model_path", required=True, help="Checkpoint directory (or its model.hxw).")
@click.option("--data", required=True, help="Dataset directory.")
@click.option("--split", default=0.5, type=float, show_default=True, help="Fraction of episodes used to fit probes.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--per-episode", default=8, type=click.IntRange(min=1), show_default=True,
              help="Relabeled (context, goal) pairs drawn per episode.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
def analyze(model_path: str, data: str, split: float, seed: int, per_episode: int, out: str) -> None:
    """Held-out R^2 of linear probes from policy embeddings to distance targets."""
    from hxe.datapipe.io import read_dataset
    from hxe.evalkit.analysis import embedding_r2

    model, _ = _load_model(model_path)
    _require_path(data, "dataset")
    _, eps = read_dataset(data)
    probes = embedding_r2(model, eps, split, seed, per_episode)
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    rows = [{"target": p.target, "r2": float(f"{p.r2:.6f}"), "n_train": p.n_train, "n_test": p.n_test, "ridge": p.ridge}
            for p in probes]
    (root / "r2.json").write_text(json.dumps({"version": 1, "rows": rows}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    lines = ["target,r2,n_train,n_test,ridge"] + [f"{r['target']},{r['r2']:.6f},{r['n_train']},{r['n_test']},{int(r['ridge'])}" for r in rows]
    (root / "r2.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for r in rows:
        click.echo(f"{r['target']}: R^2 = {r['r2']:.3f}")


@cli.command()
@click.option("--in", "in_dir", required=True, help="Directory holding report.json.")
def report(in_dir: str) -> None:
    """Validate report.json against the schema and re-render report.md."""
    from hxe.evalkit.report import REPORT_SCHEMA, markdown_tables

    p = _require_path(str(Path(in_dir) / "report.json"), "report")
    doc = json.loads(p.read_text(encoding="utf-8"))
    errors = list(jsonschema.Draft202012Validator(REPORT_SCHEMA).iter_errors(doc))
    if errors:
        raise ConfigFileError(f"{p}: schema violation at {_pointer(errors[0])}: {errors[0].message}")
    (Path(in_dir) / "report.md").write_text(markdown_tables(doc), encoding="utf-8")
    click.echo(markdown_tables(doc), nl=False)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="hxe", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG if isinstance(exc, (click.UsageError, ConfigFileError)) else exc.exit_code
    except click.Abort:
        return EXIT_RUNTIME
    except (ConfigError, ValueError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_RUNTIME
    except (HxeError, PersistenceError, OSError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_RUNTIME
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
