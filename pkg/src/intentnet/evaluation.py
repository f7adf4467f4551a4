"""Evaluation protocol: rubric scoring, HLP accuracy, aggregation, export.

Scores live on a fixed anchor grid in [0, 1]; LLM evaluators answer with a
single number that gets snapped to the nearest anchor, human scores enter
through the same record type with ``evaluator="human"``.  Aggregation is
per (module, method) cell, with high-level-planning accuracy and task
completion rate computed from sessions.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import gateway as gw
from .errors import ExtractionFailedError
from .pipeline import Plan, load_template, render_template

MODULES = ("analyzer", "planner", "calculator", "executor")
METHODS = ("zero_shot", "few_shot", "cot", "rag")
ANCHOR_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)

DEFAULT_ANCHORS = {
    1.0: "results align with expectations to a high degree",
    0.8: "results align with expectations to a high degree",
    0.6: "results align with expectations to a moderate degree",
    0.4: "results align with expectations to a just adequate degree",
    0.2: "results do not match expectations",
    0.0: "results are unusable",
}

DEFAULT_CRITERIA = {
    "analyzer": "correct feasibility call, key concepts named, required tools identified",
    "planner": "steps are ordered, executable, and cover the task end to end",
    "calculator": "numeric results are correct and constraints are respected",
    "executor": "final artifacts are complete, well-formed, and match the plan",
}


@dataclass(frozen=True)
class Rubric:
    anchors: dict[float, str] = field(default_factory=lambda: dict(DEFAULT_ANCHORS))
    criteria: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_CRITERIA))

    def __post_init__(self):
        bad = sorted(set(self.anchors) - set(ANCHOR_GRID))
        if bad:
            raise ValueError(f"anchor keys must lie on the grid {ANCHOR_GRID}, got {bad}")

    def anchors_text(self) -> str:
        return "\n".join(f"- {score:.1f}: {meaning}"
                         for score, meaning in sorted(self.anchors.items(), reverse=True))


def default_rubric() -> Rubric:
    return Rubric()


@dataclass(frozen=True)
class EvalRecord:
    module: str
    method: str
    score: float
    hi: int = 0
    task_id: str = ""
    evaluator: str = "llm"
    notes: str = ""

    def __post_init__(self):
        if self.module not in MODULES:
            raise ValueError(f"module must be one of {MODULES}, got {self.module!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not any(abs(self.score - a) < 1e-9 for a in ANCHOR_GRID):
            raise ValueError(f"score must lie on the anchor grid {ANCHOR_GRID}, got {self.score}")
        if self.hi < 0:
            raise ValueError("hi must be >= 0")
        if self.evaluator not in ("llm", "human"):
            raise ValueError(f"evaluator must be llm or human, got {self.evaluator!r}")


@dataclass(frozen=True)
class CellStats:
    mean_score: float
    mean_hi: float
    n: int


@dataclass(frozen=True)
class EvalSummary:
    cells: dict[tuple[str, str], CellStats]
    hlp_accuracy: float | None = None
    completion_rate: float | None = None


# ---------------------------------------------------------------------------
# scoring

_NUMBER_RX = re.compile(r"-?\d+(?:\.\d+)?")


def snap_to_anchor(value: float) -> float:
    """Nearest grid anchor; exact midpoints snap to the lower anchor."""
    return min(ANCHOR_GRID, key=lambda a: (abs(a - value), a))


def score_output(backend, rubric: Rubric, module: str, output_text: str,
                 method: str = "zero_shot", task_id: str = "", hi: int = 0) -> EvalRecord:
    """Have an evaluator LLM score one module output on the anchor grid.

    Off-grid numbers are snapped with a note; two numberless replies raise
    :class:`ExtractionFailedError`.
    """
    if module not in rubric.criteria:
        raise ValueError(f"rubric has no criteria for module {module!r}")

    prompt = render_template(load_template("evaluator"), {
        "module": module,
        "criteria": rubric.criteria[module],
        "anchors": rubric.anchors_text(),
        "output": output_text,
    })
    messages = gw.build_prompt(gw.ZeroShot(), prompt,
                               context="You are an impartial evaluator of network planning outputs.")

    reply = gw.complete(backend, messages)
    value = _first_number(reply.content)
    if value is None:
        retry = messages + [reply, gw.ChatMessage(
            "user", "Reply with exactly one score from the anchor grid and nothing else.")]
        reply = gw.complete(backend, retry)
        value = _first_number(reply.content)
        if value is None:
            raise ExtractionFailedError("evaluator produced no parseable score twice")

    snapped = snap_to_anchor(value)
    notes = "" if abs(snapped - value) < 1e-9 else f"snapped from {value:g}"
    return EvalRecord(module=module, method=method, score=snapped, hi=hi,
                      task_id=task_id, evaluator="llm", notes=notes)


def _first_number(text: str) -> float | None:
    m = _NUMBER_RX.search(text)
    return float(m.group(0)) if m else None


# ---------------------------------------------------------------------------
# plan agreement


def _plan_signature(plan: Plan) -> list[tuple[str, str]]:
    return [(s.action, s.tool or "") for s in plan.steps]


def hlp_accuracy(plan: Plan, golden: Plan) -> float:
    """Fraction of golden steps matched in order: LCS over (action, tool)
    pairs divided by golden length."""
    a, b = _plan_signature(plan), _plan_signature(golden)
    if not b:
        return 1.0
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)] / len(b)


# ---------------------------------------------------------------------------
# aggregation


def aggregate(records, sessions=(), golden_plan: Plan | None = None) -> EvalSummary:
    """Arithmetic means per (module, method) cell; empty cells stay absent.

    ``sessions`` contributes the completion rate and, with a golden plan,
    the HLP accuracy (fraction of session plans that fully match it).
    """
    groups: dict[tuple[str, str], list[EvalRecord]] = {}
    for record in records:
        groups.setdefault((record.module, record.method), []).append(record)

    cells = {}
    for module in MODULES:
        for method in METHODS:
            bucket = groups.get((module, method))
            if not bucket:
                continue
            cells[(module, method)] = CellStats(
                mean_score=sum(r.score for r in bucket) / len(bucket),
                mean_hi=sum(r.hi for r in bucket) / len(bucket),
                n=len(bucket),
            )

    sessions = list(sessions)
    completion_rate = None
    hlp = None
    if sessions:
        completed = sum(1 for s in sessions if s.outcome is not None and s.outcome.complete)
        completion_rate = completed / len(sessions)
        if golden_plan is not None:
            with_plans = [s for s in sessions if s.plan is not None]
            if with_plans:
                matches = sum(1 for s in with_plans
                              if hlp_accuracy(s.plan, golden_plan) == 1.0)
                hlp = matches / len(with_plans)
    return EvalSummary(cells=cells, hlp_accuracy=hlp, completion_rate=completion_rate)


# ---------------------------------------------------------------------------
# export / import

CSV_HEADER = ["module", "method", "mean_score", "mean_hi", "n"]


def export_report(summary: EvalSummary, format: str = "csv",
                  rubric: Rubric | None = None) -> str:
    """Deterministic report text; rows ordered module-major, method-minor."""
    rows = [
        (module, method, summary.cells[(module, method)])
        for module in MODULES for method in METHODS
        if (module, method) in summary.cells
    ]

    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for module, method, cell in rows:
            writer.writerow([module, method, cell.mean_score, cell.mean_hi, cell.n])
        return out.getvalue()

    if format == "json":
        doc = {
            "cells": [
                {"module": module, "method": method, "mean_score": cell.mean_score,
                 "mean_hi": cell.mean_hi, "n": cell.n}
                for module, method, cell in rows
            ],
            "hlp_accuracy": summary.hlp_accuracy,
            "completion_rate": summary.completion_rate,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    if format == "markdown":
        rubric = rubric or default_rubric()
        lines = ["# Evaluation report", "",
                 "| module | method | mean score | mean HI | n |",
                 "|--------|--------|------------|---------|---|"]
        for module, method, cell in rows:
            lines.append(f"| {module} | {method} | {cell.mean_score:g} | {cell.mean_hi:g} | {cell.n} |")
        if summary.completion_rate is not None:
            lines += ["", f"Task completion rate: {summary.completion_rate:g}"]
        if summary.hlp_accuracy is not None:
            lines.append(f"High-level planning accuracy: {summary.hlp_accuracy:g}")
        lines += ["", "## Score anchors", ""]
        lines += [f"- {score:.1f}: {meaning}"
                  for score, meaning in sorted(rubric.anchors.items(), reverse=True)]
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown format {format!r}")


def parse_report(text: str, format: str = "csv") -> EvalSummary:
    """Inverse of export_report for csv and json (markdown is write-only)."""
    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"bad header {header!r}")
        cells = {}
        for row in reader:
            if not row:
                continue
            module, method, mean_score, mean_hi, n = row
            cells[(module, method)] = CellStats(float(mean_score), float(mean_hi), int(n))
        return EvalSummary(cells=cells)

    if format == "json":
        doc = json.loads(text)
        cells = {
            (c["module"], c["method"]): CellStats(c["mean_score"], c["mean_hi"], c["n"])
            for c in doc["cells"]
        }
        return EvalSummary(cells=cells, hlp_accuracy=doc.get("hlp_accuracy"),
                           completion_rate=doc.get("completion_rate"))

    raise ValueError(f"unknown format {format!r}")


# ---------------------------------------------------------------------------
# record persistence (JSONL, append-only)


def record_to_dict(record: EvalRecord) -> dict:
    return {"module": record.module, "method": record.method, "score": record.score,
            "hi": record.hi, "task_id": record.task_id, "evaluator": record.evaluator,
            "notes": record.notes}


def record_from_dict(doc: dict) -> EvalRecord:
    return EvalRecord(module=doc["module"], method=doc["method"], score=float(doc["score"]),
                      hi=int(doc.get("hi", 0)), task_id=doc.get("task_id", ""),
                      evaluator=doc.get("evaluator", "llm"), notes=doc.get("notes", ""))


def append_record(path: str | Path, record: EvalRecord) -> None:
    with open(path, "a", encoding="utf-8") as sink:
        sink.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")


def read_records(path: str | Path) -> list[EvalRecord]:
    path = Path(path)
    if not path.exists():
        return []
    return [record_from_dict(json.loads(line))
            for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
