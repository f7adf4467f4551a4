"""Command-line entry points.

Subcommands: plan (one-shot pipeline run), compile (intent -> artifact),
oracle (exact solve), eval (score a task corpus and export the report),
rag ingest, render, serve.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, intents, pipeline, rag
from .errors import IntentNetError, UnrecognizedIntentError
from .gateway import load_replay_script
from .netmodel import parse_topology, parse_traffic_matrix
from .render import RenderSpec, dot_to_svg, render_dot
from .solver import (
    CostModel,
    PlanningProblem,
    brute_force_oracle,
    plan_to_json,
)


def _add_cost_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--u-max", type=float, default=0.8, help="utilization cap in (0,1]")
    parser.add_argument("--module-cost", type=float, default=1.0)
    parser.add_argument("--fiber-cost-per-km", type=float, default=1.0)
    parser.add_argument("--fiber-fixed-cost", type=float, default=0.0)


def _problem(args) -> PlanningProblem:
    topology = parse_topology(Path(args.topology).read_text(encoding="utf-8"))
    traffic = parse_traffic_matrix(Path(args.traffic).read_text(encoding="utf-8"))
    cost = CostModel(module_cost=args.module_cost, fiber_cost_per_km=args.fiber_cost_per_km,
                     fiber_fixed_cost=args.fiber_fixed_cost)
    return PlanningProblem(topology=topology, traffic=traffic, u_max=args.u_max, cost=cost)


def _cmd_plan(args) -> int:
    backend = load_replay_script(args.backend)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_dir = Path(args.topology).resolve().parent

    request = pipeline.AnalysisRequest(
        task_text=args.task,
        constraint_text=f"max_load <= {args.u_max} * total_capacity during peak hours",
        attachments=(Path(args.topology).name, Path(args.traffic).name),
    )
    defaults = pipeline.PipelineDefaults(
        u_max=args.u_max,
        cost=CostModel(module_cost=args.module_cost, fiber_cost_per_km=args.fiber_cost_per_km,
                       fiber_fixed_cost=args.fiber_fixed_cost),
    )
    session = pipeline.new_session(request, base_dir=base_dir, defaults=defaults)
    outcome = pipeline.run_session(session, args.mode, backend)

    for name, content in sorted(session.artifacts.items()):
        (out / name).write_text(content, encoding="utf-8")
    print(f"session {'complete' if outcome.complete else 'INCOMPLETE'} "
          f"({outcome.completion_fraction:.0%}); artifacts in {out}")
    if outcome.total_cost is not None:
        print(f"total cost: {outcome.total_cost}")
    if outcome.error:
        print(f"error: {outcome.error}", file=sys.stderr)
    return 0 if outcome.complete else 1


def _cmd_compile(args) -> int:
    try:
        intent = intents.parse_intent_pattern(args.text)
    except UnrecognizedIntentError as exc:
        print(f"unrecognized intent: {exc.text}", file=sys.stderr)
        return 1
    artifact = intents.compile_intent(intent)
    print(json.dumps(intents.artifact_to_dict(artifact), indent=2, sort_keys=True))
    return 0


def _cmd_oracle(args) -> int:
    plan = brute_force_oracle(_problem(args))
    text = plan_to_json(plan)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} (cost {plan.total_cost})")
    else:
        print(text)
    return 0


def _cmd_eval(args) -> int:
    backend = load_replay_script(args.backend)
    rubric = evaluation.default_rubric()
    records = []
    for line in Path(args.tasks).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        task = json.loads(line)
        records.append(evaluation.score_output(
            backend, rubric, task["module"], task["output"],
            method=task.get("method", "zero_shot"), task_id=task.get("task_id", ""),
            hi=int(task.get("hi", 0))))
    summary = evaluation.aggregate(records)
    text = evaluation.export_report(summary, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} ({len(records)} records)")
    else:
        print(text)
    return 0


def _cmd_rag(args) -> int:
    if args.rag_command == "ingest":
        store = rag.VectorStore()
        count = store.ingest_dir(args.corpus)
        store.save(args.store)
        print(f"indexed {count} documents ({len(store.chunks)} chunks) into {args.store}")
        return 0
    raise ValueError(f"unknown rag subcommand {args.rag_command!r}")


def _cmd_render(args) -> int:
    topology = parse_topology(Path(args.topology).read_text(encoding="utf-8"))
    plan = None
    if args.plan:
        from .solver import plan_from_dict

        plan = plan_from_dict(json.loads(Path(args.plan).read_text(encoding="utf-8")))
    spec = RenderSpec(layout=args.layout)
    dot = render_dot(topology, plan, spec)
    svg = dot_to_svg(dot, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "topology.dot").write_text(dot, encoding="utf-8")
    (out / "topology.svg").write_text(svg, encoding="utf-8")
    print(f"wrote {out / 'topology.dot'} and {out / 'topology.svg'}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_config

    config = load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intentnet",
                                     description="intent-driven network capacity planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run the full pipeline once against a replay script")
    p.add_argument("--topology", required=True)
    p.add_argument("--traffic", required=True)
    p.add_argument("--backend", required=True, help="replay script (JSONL of match/response)")
    p.add_argument("--mode", choices=("auto", "checkpoint"), default="auto")
    p.add_argument("--out", required=True, help="artifact output directory")
    p.add_argument("--task", default="Plan the IP network capacity for the attached traffic matrix.")
    _add_cost_args(p)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("compile", help="compile an intent sentence to a network artifact")
    p.add_argument("text")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("oracle", help="exact brute-force capacity plan (small instances)")
    p.add_argument("--topology", required=True)
    p.add_argument("--traffic", required=True)
    p.add_argument("--out")
    _add_cost_args(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("eval", help="score a task corpus with a replay evaluator")
    p.add_argument("--tasks", required=True, help="JSONL of {module, method, output, task_id, hi}")
    p.add_argument("--backend", required=True, help="evaluator replay script")
    p.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("rag", help="retrieval store maintenance")
    rag_sub = p.add_subparsers(dest="rag_command", required=True)
    ingest = rag_sub.add_parser("ingest", help="index a corpus directory into a snapshot")
    ingest.add_argument("--corpus", required=True)
    ingest.add_argument("--store", default="ragstore.json")
    p.set_defaults(func=_cmd_rag)

    p = sub.add_parser("render", help="draw a topology (optionally with a plan) as DOT + SVG")
    p.add_argument("--topology", required=True)
    p.add_argument("--plan")
    p.add_argument("--layout", choices=("coords", "circular"), default="coords")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--config", required=True, help="TOML or JSON service config")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IntentNetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
