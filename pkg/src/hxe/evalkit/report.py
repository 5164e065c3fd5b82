"""``report.json``, ``report.md`` and SVG trajectory plots."""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

from hxe.evalkit.metrics import EvalReport

REPORT_SCHEMA_VERSION = 1

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "fingerprint", "rows"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": REPORT_SCHEMA_VERSION},
        "fingerprint": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "partial": {"type": "boolean"},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["mixture", "seed", "task", "success", "collisions", "trials"],
                "additionalProperties": False,
                "properties": {
                    "mixture": {"type": "string"},
                    "seed": {"type": "integer", "minimum": 0},
                    "task": {"type": "string"},
                    "success": {"type": "number", "minimum": 0, "maximum": 1},
                    "collisions": {"type": "number", "minimum": 0},
                    "trials": {"type": "integer", "minimum": 1},
                },
            },
        },
    },
}


def _fmt(x: float) -> float:
    # fixed precision keeps re-emitted files byte-identical across platforms
    return float(f"{x:.6f}")


def report_document(reports: list[EvalReport], partial: bool = False) -> dict:
    rows = []
    for r in sorted(reports, key=lambda r: (r.mixture, r.seed, r.task)):
        row = r.row()
        row["success"] = _fmt(row["success"])
        row["collisions"] = _fmt(row["collisions"])
        rows.append(row)
    fp = hashlib.sha256("".join(sorted(r.fingerprint for r in reports)).encode()).hexdigest()
    doc = {"schema_version": REPORT_SCHEMA_VERSION, "fingerprint": fp, "rows": rows}
    if partial:
        doc["partial"] = True
    return doc


def markdown_tables(doc: dict) -> str:
    """Success and collision tables with mixtures as rows and tasks as columns (means over seeds)."""
    tasks = sorted({r["task"] for r in doc["rows"]})
    mixes = sorted({r["mixture"] for r in doc["rows"]})
    cell: dict[tuple[str, str], list[dict]] = defaultdict(list)
    for r in doc["rows"]:
        cell[(r["mixture"], r["task"])].append(r)
    lines = ["# Evaluation report", "", f"Fingerprint: `{doc['fingerprint']}`", ""]
    if doc.get("partial"):
        lines += ["**Partial results: a run failed before the sweep finished.**", ""]
    for title, key in (("Success rate", "success"), ("Collisions per run", "collisions")):
        lines += [f"## {title}", "", "| Mixture | " + " | ".join(tasks) + " |", "|---" * (len(tasks) + 1) + "|"]
        for m in mixes:
            vals = []
            for t in tasks:
                rs = cell.get((m, t), [])
                vals.append(f"{sum(r[key] for r in rs) / len(rs):.3f}" if rs else "n/a")
            lines.append(f"| {m or '(model)'} | " + " | ".join(vals) + " |")
        lines.append("")
    lines += ["## Per seed", "", "| Mixture | Seed | Task | Success | Collisions | Trials |", "|---|---|---|---|---|---|"]
    for r in doc["rows"]:
        lines.append(f"| {r['mixture'] or '(model)'} | {r['seed']} | {r['task']} | {r['success']:.3f} | {r['collisions']:.3f} | {r['trials']} |")
    return "\n".join(lines) + "\n"


def trajectory_svg(report: EvalReport, size: int = 400) -> str:
    """One polyline per trial, all trials sharing one bounding box."""
    pts = [p for r in report.results for p in r.trajectory] or [(0.0, 0.0)]
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0, 1e-6)
    pad = 10

    def px(x, y):
        return (pad + (x - x0) / span * (size - 2 * pad), size - pad - (y - y0) / span * (size - 2 * pad))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
           f"<title>{escape(report.task)} {escape(report.mixture)} seed {report.seed}</title>"]
    for r in report.results:
        coords = " ".join("{:.2f},{:.2f}".format(*px(x, y)) for x, y in r.trajectory)
        color = "#2a7" if r.success else "#c33"
        out.append(f'<polyline data-trial="{r.index}" fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(reports: list[EvalReport], path, partial: bool = False) -> dict:
    if not reports:
        raise ValueError("emit_report needs at least one report")
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    doc = report_document(reports, partial)
    (root / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (root / "report.md").write_text(markdown_tables(doc), encoding="utf-8")
    plots = root / "plots"
    plots.mkdir(exist_ok=True)
    for r in reports:
        if r.results:
            name = f"{r.task}__{r.mixture or 'model'}__s{r.seed}.svg"
            (plots / name).write_text(trajectory_svg(r), encoding="utf-8")
    return doc


def validate_report(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, REPORT_SCHEMA)
