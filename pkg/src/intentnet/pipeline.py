"""Four-role session orchestration: analyzer, planner, calculator, executor.

The analyzer and planner are LLM exchanges (validated JSON with one
reprompt); the calculator and executor are native code driven by the plan's
tool bindings, because models do not get to do arithmetic here.  Sessions
carry a transcript of every role exchange, count human interventions
(plan edits, approvals-with-change, what-ifs), and survive failed steps.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import gateway as gw
from . import intents, rag
from .errors import (
    ExtractionFailedError,
    GatewayError,
    IllegalTransitionError,
    InfeasibleReportError,
    InvariantError,
    NotFoundError,
    ReplayMissError,
    UnrecognizedIntentError,
)
from .netmodel import (
    Action,
    Topology,
    TrafficMatrix,
    action_from_dict,
    action_to_dict,
    apply_action,
    parse_topology,
    parse_traffic_matrix,
)
from .render import RenderSpec, dot_to_svg, render_dot, render_report
from .solver import (
    CapacityPlan,
    CostModel,
    PlanningProblem,
    brute_force_oracle,
    optimize,
    plan_to_json,
)

STEP_ACTIONS = ("read_file", "call_tool", "emit_artifact")
STEP_STATUSES = ("pending", "approved", "running", "done", "failed", "edited")
MAX_LOOP_COUNT = 32


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class AnalysisRequest:
    task_text: str
    state_text: str = ""
    constraint_text: str = ""
    attachments: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attachments", tuple(self.attachments))
        if not self.task_text:
            raise ValueError("task_text must be non-empty")


@dataclass(frozen=True)
class AnalysisReport:
    feasible: bool
    concepts: tuple[str, ...] = ()
    required_tools: tuple[str, ...] = ()
    rationale: str = ""
    warnings: tuple[str, ...] = ()


@dataclass
class Step:
    id: int
    description: str
    action: str
    control: str = "sequence"
    loop_count: int = 1
    tool: str | None = None
    args: dict = field(default_factory=dict)
    status: str = "pending"
    result_ref: str | None = None

    def __post_init__(self):
        if self.action not in STEP_ACTIONS:
            raise ValueError(f"action must be one of {STEP_ACTIONS}, got {self.action!r}")
        if self.control not in ("sequence", "loop"):
            raise ValueError(f"control must be sequence or loop, got {self.control!r}")
        if self.control == "loop" and not 1 <= self.loop_count <= MAX_LOOP_COUNT:
            raise ValueError(f"loop count must lie in [1, {MAX_LOOP_COUNT}]")
        if self.action == "call_tool" and not self.tool:
            raise ValueError(f"step {self.id}: call_tool requires a tool name")


@dataclass
class Plan:
    steps: list[Step] = field(default_factory=list)

    def step(self, step_id: int) -> Step:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise NotFoundError(f"no step with id {step_id}")


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    args: dict[str, bool]  # arg name -> required


@dataclass(frozen=True)
class ToolRegistry:
    tools: dict[str, ToolSpec]

    def __contains__(self, name: str) -> bool:
        return name in self.tools

    def catalog_text(self) -> str:
        return "\n".join(f"- {t.name}: {t.description}" for t in self.tools.values())

    def validate_args(self, name: str, args: dict) -> None:
        spec = self.tools.get(name)
        if spec is None:
            raise InvariantError(f"unknown tool {name!r}")
        for arg, required in spec.args.items():
            if required and arg not in args:
                raise InvariantError(f"tool {name}: missing required arg {arg!r}")
        unknown = sorted(set(args) - set(spec.args))
        if unknown:
            raise InvariantError(f"tool {name}: unknown args {unknown}")


def default_registry() -> ToolRegistry:
    specs = [
        ToolSpec("read_topology", "parse a topology JSON attachment into the session",
                 {"path": True}),
        ToolSpec("read_traffic_matrix", "parse a traffic CSV attachment into the session",
                 {"path": True}),
        ToolSpec("solve_capacity", "route demands and size IP link modules under the utilization cap",
                 {"topology": False, "u_max": False, "k_paths": False, "module_cost": False,
                  "fiber_cost_per_km": False, "fiber_fixed_cost": False}),
        ToolSpec("brute_force_oracle", "exact optimum by exhaustive route enumeration (small instances)",
                 {"topology": False, "u_max": False, "module_cost": False,
                  "fiber_cost_per_km": False, "fiber_fixed_cost": False}),
        ToolSpec("render_topology", "draw the dual-layer topology as DOT and SVG with congestion colors",
                 {"layout": False}),
        ToolSpec("compile_intent", "translate an intent sentence into a network-language artifact",
                 {"text": True}),
        ToolSpec("rag_search", "retrieve relevant document chunks for a query",
                 {"query": True, "k": False}),
        ToolSpec("apply_action", "apply an add-fiber or add-capacity action to the session topology",
                 {"action": True}),
    ]
    return ToolRegistry(tools={s.name: s for s in specs})


@dataclass
class PipelineDefaults:
    u_max: float = 0.8
    k_paths: int = 3
    cost: CostModel = field(default_factory=CostModel)
    render_spec: RenderSpec = field(default_factory=RenderSpec)
    rag_store: rag.VectorStore | None = None


@dataclass
class StepResult:
    step_id: int
    status: str  # done | failed
    summary: str = ""
    data: dict = field(default_factory=dict)
    error: str | None = None
    artifact_names: tuple[str, ...] = ()


@dataclass
class SessionOutcome:
    complete: bool
    completion_fraction: float
    total_cost: float | None = None
    artifact_names: tuple[str, ...] = ()
    error: str | None = None


@dataclass
class SessionState:
    id: str
    request: AnalysisRequest
    defaults: PipelineDefaults = field(default_factory=PipelineDefaults)
    registry: ToolRegistry = field(default_factory=default_registry)
    base_dir: Path | None = None
    mode: str = "auto"
    report: AnalysisReport | None = None
    plan: Plan | None = None
    topology: Topology | None = None
    traffic: TrafficMatrix | None = None
    capacity_plan: CapacityPlan | None = None
    solve_args: dict = field(default_factory=dict)
    step_results: dict[int, StepResult] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)
    transcript: list[dict] = field(default_factory=list)
    whatifs: list[dict] = field(default_factory=list)
    hi_count: int = 0
    outcome: SessionOutcome | None = None
    gateway: object = None

    def say(self, role: str, content: str) -> None:
        self.transcript.append({"role": role, "content": content})

    def resolve_attachment(self, name: str) -> Path:
        if self.base_dir is None:
            raise NotFoundError(f"session has no attachment directory for {name!r}")
        return resolve_attachment(self.base_dir, name)


def resolve_attachment(base_dir: str | Path, name: str) -> Path:
    """Resolve an attachment inside base_dir, refusing path traversal."""
    base = Path(base_dir).resolve()
    candidate = (base / name).resolve()
    if base != candidate and base not in candidate.parents:
        raise NotFoundError(f"attachment {name!r} escapes the data directory")
    if not candidate.is_file():
        raise NotFoundError(f"attachment {name!r} not found")
    return candidate


def new_session(request: AnalysisRequest, base_dir: str | Path | None = None,
                defaults: PipelineDefaults | None = None,
                registry: ToolRegistry | None = None,
                session_id: str | None = None) -> SessionState:
    session = SessionState(
        id=session_id or uuid.uuid4().hex,
        request=request,
        defaults=defaults or PipelineDefaults(),
        registry=registry or default_registry(),
        base_dir=Path(base_dir) if base_dir is not None else None,
    )
    session.say("operator", request.task_text)
    return session


# ---------------------------------------------------------------------------
# prompt plumbing


def load_template(name: str) -> str:
    return (resources.files("intentnet") / "prompts" / f"{name}.txt").read_text(encoding="utf-8")


def render_template(template: str, slots: dict[str, str]) -> str:
    text = template
    for key, value in slots.items():
        text = text.replace("{{" + key + "}}", value)
    return text


def _json_exchange(backend, messages, validator, on_reply=None):
    """One completion with schema validation and a single reprompt."""
    reply = gw.complete(backend, messages)
    if on_reply:
        on_reply(reply)
    try:
        return validator(reply.content)
    except (ValueError, InvariantError) as first_error:
        retry = messages + [reply, gw.ChatMessage(
            "user", f"Invalid response: {first_error}. Respond with only the corrected JSON.")]
        reply = gw.complete(backend, retry)
        if on_reply:
            on_reply(reply)
        try:
            return validator(reply.content)
        except (ValueError, InvariantError) as second_error:
            raise ExtractionFailedError(
                f"two invalid responses; last error: {second_error}") from second_error


# ---------------------------------------------------------------------------
# analyzer


def analyze(request: AnalysisRequest, backend, strategy=None,
            registry: ToolRegistry | None = None,
            transcript: list | None = None) -> AnalysisReport:
    """Ask the analyzer role for a feasibility report and validate it.

    Tool names outside the registry are stripped with a recorded warning.
    """
    if not request.task_text:
        raise ValueError("task_text must be non-empty")
    registry = registry or default_registry()
    strategy = strategy if strategy is not None else gw.ZeroShot()

    prompt = render_template(load_template("analyzer"), {
        "task": request.task_text,
        "state": request.state_text or "(not described)",
        "constraints": request.constraint_text or "(none stated)",
        "tools": registry.catalog_text(),
        "context": "",
    })
    messages = gw.build_prompt(strategy, prompt)

    warnings: list[str] = []

    def validator(raw: str) -> AnalysisReport:
        doc = intents.extract_json_object(raw)
        if not isinstance(doc.get("feasible"), bool):
            raise ValueError("'feasible' must be a boolean")
        concepts = doc.get("concepts", [])
        tools = doc.get("required_tools", [])
        if not isinstance(concepts, list) or not isinstance(tools, list):
            raise ValueError("'concepts' and 'required_tools' must be lists")
        kept = []
        for name in tools:
            if name in registry:
                kept.append(name)
            else:
                warnings.append(f"stripped unknown tool {name!r} from analyzer report")
        return AnalysisReport(
            feasible=doc["feasible"],
            concepts=tuple(str(c) for c in concepts),
            required_tools=tuple(kept),
            rationale=str(doc.get("rationale", "")),
            warnings=tuple(warnings),
        )

    def record(reply):
        if transcript is not None:
            transcript.append({"role": "analyzer", "content": reply.content})

    report = _json_exchange(backend, messages, validator, on_reply=record)
    if transcript is not None:
        for warning in report.warnings:
            transcript.append({"role": "system", "content": f"warning: {warning}"})
    return report


# ---------------------------------------------------------------------------
# planner


def _step_from_doc(doc: dict) -> Step:
    if not isinstance(doc, dict):
        raise ValueError("each step must be an object")
    if not isinstance(doc.get("id"), int):
        raise ValueError("step 'id' must be an integer")
    args = doc.get("args", {})
    if not isinstance(args, dict):
        raise ValueError("step 'args' must be an object")
    try:
        return Step(
            id=doc["id"],
            description=str(doc.get("description", "")),
            action=doc.get("action", ""),
            control=doc.get("control", "sequence"),
            loop_count=int(doc.get("count", 1)),
            tool=doc.get("tool"),
            args=dict(args),
        )
    except ValueError as exc:
        raise ValueError(str(exc)) from exc


def validate_plan(plan: Plan, registry: ToolRegistry, request: AnalysisRequest) -> None:
    """Enforce plan invariants; raises :class:`InvariantError` on the first
    violation so the planner can be reprompted with the reason."""
    last_id = None
    traffic_ready = False
    for step in plan.steps:
        if last_id is not None and step.id <= last_id:
            raise InvariantError(f"step ids must be strictly increasing, {step.id} after {last_id}")
        last_id = step.id

        if step.action == "read_file":
            path = step.args.get("path")
            if not path:
                raise InvariantError(f"step {step.id}: read_file needs args.path")
            if path not in request.attachments:
                raise InvariantError(f"step {step.id}: path {path!r} is not an attachment")
            if step.tool is not None and step.tool not in registry:
                raise InvariantError(f"step {step.id}: unknown reader tool {step.tool!r}")
            if step.tool == "read_traffic_matrix" or str(path).endswith(".csv"):
                traffic_ready = True
        elif step.action == "call_tool":
            registry.validate_args(step.tool, step.args)
            if step.tool in ("solve_capacity", "brute_force_oracle"):
                if not traffic_ready:
                    raise InvariantError(
                        f"step {step.id}: {step.tool} needs an earlier read_file step "
                        "loading the traffic matrix")
                topology_ref = step.args.get("topology")
                if topology_ref and topology_ref not in request.attachments:
                    raise InvariantError(
                        f"step {step.id}: topology {topology_ref!r} is not an attachment")
        elif step.action == "emit_artifact":
            if "text" not in step.args:
                raise InvariantError(f"step {step.id}: emit_artifact needs args.text")


def make_plan(report: AnalysisReport, request: AnalysisRequest, backend,
              strategy=None, registry: ToolRegistry | None = None,
              transcript: list | None = None) -> Plan:
    """Ask the planner role for a step list and validate it against the
    step schema and plan invariants (one reprompt, then extraction failure)."""
    if not report.feasible:
        raise InfeasibleReportError("cannot plan an infeasible task")
    registry = registry or default_registry()
    strategy = strategy if strategy is not None else gw.ZeroShot()

    analysis_context = (
        f"concepts: {', '.join(report.concepts) or '(none)'}; "
        f"required tools: {', '.join(report.required_tools) or '(none)'}; "
        f"rationale: {report.rationale or '(none)'}"
    )
    prompt = render_template(load_template("planner"), {
        "task": request.task_text,
        "state": request.state_text or "(not described)",
        "constraints": request.constraint_text or "(none stated)",
        "attachments": ", ".join(request.attachments) or "(none)",
        "tools": registry.catalog_text(),
        "context": analysis_context,
    })
    messages = gw.build_prompt(strategy, prompt)

    def validator(raw: str) -> Plan:
        doc = intents.extract_json_object(raw)
        steps_doc = doc.get("steps")
        if not isinstance(steps_doc, list) or not steps_doc:
            raise ValueError("'steps' must be a non-empty list")
        plan = Plan(steps=[_step_from_doc(s) for s in steps_doc])
        validate_plan(plan, registry, request)
        return plan

    def record(reply):
        if transcript is not None:
            transcript.append({"role": "planner", "content": reply.content})

    return _json_exchange(backend, messages, validator, on_reply=record)


# ---------------------------------------------------------------------------
# plan editing and approval (the human-intervention surface)

_EDITABLE_FIELDS = ("description", "action", "control", "loop_count", "tool", "args")


def edit_plan(session: SessionState, edits: list[dict]) -> Plan:
    """Apply operator edits; one call counts as one human intervention.

    Unknown step ids raise before anything mutates, so a failed edit leaves
    hi_count untouched.
    """
    if session.plan is None:
        raise IllegalTransitionError("no plan to edit")
    for edit in edits:
        session.plan.step(int(edit["step_id"]))  # NotFoundError before any mutation

    staged = []
    for edit in edits:
        step = session.plan.step(int(edit["step_id"]))
        fields = {k: v for k, v in edit.items() if k != "step_id"}
        unknown = sorted(set(fields) - set(_EDITABLE_FIELDS))
        if unknown:
            raise InvariantError(f"cannot edit step fields {unknown}")
        staged.append((step, fields))

    before = [(s, s.description, s.action, s.control, s.loop_count, s.tool, dict(s.args), s.status)
              for s, _ in staged]
    try:
        for step, fields in staged:
            for key, value in fields.items():
                setattr(step, key, dict(value) if key == "args" else value)
            step.__post_init__()  # re-check step invariants after mutation
            step.status = "edited"
        validate_plan(session.plan, session.registry, session.request)
    except (ValueError, InvariantError) as exc:
        for step, description, action, control, loop_count, tool, args, status in before:
            step.description, step.action, step.control = description, action, control
            step.loop_count, step.tool, step.args, step.status = loop_count, tool, args, status
        raise InvariantError(f"edit rejected: {exc}") from exc

    session.hi_count += 1
    edited_ids = sorted({int(e["step_id"]) for e in edits})
    session.say("operator", f"HI edit_plan: steps {edited_ids}")
    return session.plan


def approve_step(session: SessionState, step_id: int, changes: dict | None = None) -> StepResult:
    """Checkpoint-mode approval; approving with changes counts as one HI."""
    if session.plan is None:
        raise IllegalTransitionError("no plan to approve")
    step = session.plan.step(step_id)
    if step.status not in ("pending", "approved", "edited"):
        raise IllegalTransitionError(f"step {step_id} is {step.status}, not awaiting approval")
    if changes:
        edit_plan(session, [{"step_id": step_id, **changes}])
    else:
        step.status = "approved"
    result = run_step(session, step)
    _maybe_finalize(session)
    return result


# ---------------------------------------------------------------------------
# step execution (calculator + executor)


def run_step(session: SessionState, step: Step) -> StepResult:
    """Execute one step natively; tool errors land in a failed StepResult
    and the session survives."""
    runnable = step.status in ("approved", "edited") or (
        step.status == "pending" and session.mode == "auto")
    if not runnable:
        raise IllegalTransitionError(
            f"step {step.id} has status {step.status}; approve it first or run in auto mode")

    step.status = "running"
    iterations = step.loop_count if step.control == "loop" else 1
    try:
        result = None
        for _ in range(iterations):
            result = _dispatch(session, step)
        if iterations > 1:
            result.summary += f" (x{iterations})"
    except Exception as exc:  # tool failures must not kill the session
        step.status = "failed"
        result = StepResult(step_id=step.id, status="failed",
                            error=f"{type(exc).__name__}: {exc}")
    else:
        step.status = "done"
    session.step_results[step.id] = result
    if result.artifact_names:
        step.result_ref = result.artifact_names[0]
    return result


def _problem_from(session: SessionState, topology: Topology, args: dict) -> PlanningProblem:
    d = session.defaults
    cost = CostModel(
        module_cost=float(args.get("module_cost", d.cost.module_cost)),
        fiber_cost_per_km=float(args.get("fiber_cost_per_km", d.cost.fiber_cost_per_km)),
        fiber_fixed_cost=float(args.get("fiber_fixed_cost", d.cost.fiber_fixed_cost)),
        currency=d.cost.currency,
    )
    return PlanningProblem(
        topology=topology,
        traffic=session.traffic,
        u_max=float(args.get("u_max", d.u_max)),
        cost=cost,
        k_paths=int(args.get("k_paths", d.k_paths)),
    )


def _require_topology(session: SessionState, args: dict) -> Topology:
    ref = args.get("topology")
    if ref:
        session.topology = parse_topology(session.resolve_attachment(ref).read_text(encoding="utf-8"))
    if session.topology is None:
        raise IllegalTransitionError("no topology loaded; read one first or pass args.topology")
    return session.topology


def _dispatch(session: SessionState, step: Step) -> StepResult:
    if step.action == "read_file":
        return _run_read_file(session, step)
    if step.action == "emit_artifact" or step.tool == "compile_intent":
        return _run_emit_artifact(session, step)
    if step.action == "call_tool":
        session.registry.validate_args(step.tool, step.args)
        runner = _TOOL_RUNNERS.get(step.tool)
        if runner is None:
            raise NotFoundError(f"tool {step.tool!r} has no native runner")
        return runner(session, step)
    raise InvariantError(f"step {step.id}: unsupported action {step.action!r}")


def _run_read_file(session: SessionState, step: Step) -> StepResult:
    path = session.resolve_attachment(step.args["path"])
    text = path.read_text(encoding="utf-8")
    kind = step.tool or ("read_topology" if path.suffix == ".json" else
                         "read_traffic_matrix" if path.suffix == ".csv" else "document")
    if kind == "read_topology":
        session.topology = parse_topology(text)
        summary = (f"loaded topology: {len(session.topology.nodes)} nodes, "
                   f"{len(session.topology.fibers)} fibers, {len(session.topology.ip_links)} ip links")
    elif kind == "read_traffic_matrix":
        session.traffic = parse_traffic_matrix(text)
        summary = f"loaded traffic matrix: {len(session.traffic.demands)} demands"
    else:
        if session.defaults.rag_store is None:
            session.defaults.rag_store = rag.VectorStore()
        session.defaults.rag_store.add_document(path.name, text)
        summary = f"indexed document {path.name}"
    session.say("calculator", f"step {step.id}: {summary}")
    return StepResult(step_id=step.id, status="done", summary=summary)


def _run_solver(session: SessionState, step: Step, exact: bool) -> StepResult:
    topology = _require_topology(session, step.args)
    if session.traffic is None:
        raise IllegalTransitionError("no traffic matrix loaded; read one first")
    problem = _problem_from(session, topology, step.args)
    plan = brute_force_oracle(problem) if exact else optimize(problem)
    artifact = "oracle_plan.json" if exact else "plan.json"
    session.artifacts[artifact] = plan_to_json(plan, session.traffic)
    if not exact:
        session.capacity_plan = plan
        session.solve_args = dict(step.args)
    summary = (f"{'oracle' if exact else 'optimizer'} cost {plan.total_cost}"
               f" ({'feasible' if plan.feasible else 'infeasible'})")
    session.say("calculator", f"step {step.id}: {summary}")
    return StepResult(step_id=step.id, status="done", summary=summary,
                      data={"total_cost": plan.total_cost, "feasible": plan.feasible},
                      artifact_names=(artifact,))


def _run_render(session: SessionState, step: Step) -> StepResult:
    if session.topology is None:
        raise IllegalTransitionError("no topology loaded; read one first")
    spec = session.defaults.render_spec
    if "layout" in step.args:
        spec = RenderSpec(congestion_thresholds=spec.congestion_thresholds,
                          layout=step.args["layout"])
    dot = render_dot(session.topology, session.capacity_plan, spec)
    svg = dot_to_svg(dot, spec)
    session.artifacts["topology.dot"] = dot
    session.artifacts["topology.svg"] = svg
    summary = "rendered topology.dot and topology.svg"
    session.say("executor", f"step {step.id}: {summary}")
    return StepResult(step_id=step.id, status="done", summary=summary,
                      artifact_names=("topology.dot", "topology.svg"))


def _run_rag_search(session: SessionState, step: Step) -> StepResult:
    store = session.defaults.rag_store
    if store is None:
        raise IllegalTransitionError("no retrieval store configured for this session")
    hits = rag.search(store, step.args["query"], k=int(step.args.get("k", 3)))
    data = {"results": [
        {"source": c.source, "position": c.position, "score": score} for c, score in hits]}
    summary = f"retrieved {len(hits)} chunks"
    session.say("calculator", f"step {step.id}: {summary}")
    return StepResult(step_id=step.id, status="done", summary=summary, data=data)


def _run_apply_action(session: SessionState, step: Step) -> StepResult:
    if session.topology is None:
        raise IllegalTransitionError("no topology loaded; read one first")
    action = action_from_dict(step.args["action"])
    session.topology = apply_action(session.topology, action)
    summary = f"applied {step.args['action'].get('type')}"
    session.say("calculator", f"step {step.id}: {summary}")
    return StepResult(step_id=step.id, status="done", summary=summary)


def _run_emit_artifact(session: SessionState, step: Step) -> StepResult:
    text = step.args["text"]
    try:
        intent = intents.parse_intent_pattern(text)
    except UnrecognizedIntentError:
        if session.gateway is None:
            raise
        intent = intents.parse_intent_llm(text, session.gateway)
    artifact = intents.compile_intent(intent)
    name = f"artifact_step{step.id}.json"
    session.artifacts[name] = json.dumps(intents.artifact_to_dict(artifact),
                                         indent=2, sort_keys=True)
    summary = f"compiled {intent.kind} intent to {artifact.kind}"
    session.say("executor", f"step {step.id}: {summary}")
    return StepResult(step_id=step.id, status="done", summary=summary,
                      data={"kind": artifact.kind}, artifact_names=(name,))


_TOOL_RUNNERS = {
    "read_topology": _run_read_file,
    "read_traffic_matrix": _run_read_file,
    "solve_capacity": lambda s, st: _run_solver(s, st, exact=False),
    "brute_force_oracle": lambda s, st: _run_solver(s, st, exact=True),
    "render_topology": _run_render,
    "rag_search": _run_rag_search,
    "apply_action": _run_apply_action,
    "compile_intent": _run_emit_artifact,
}


# ---------------------------------------------------------------------------
# session driver


def _maybe_finalize(session: SessionState) -> SessionOutcome | None:
    """Build the outcome once every step is terminal (or one failed)."""
    if session.plan is None:
        return None
    steps = session.plan.steps
    done = sum(1 for s in steps if s.status == "done")
    failed = any(s.status == "failed" for s in steps)
    if not failed and done < len(steps):
        return None
    return _finalize(session, done, len(steps), error=None if not failed else "step failed")


def _finalize(session: SessionState, done: int, total: int,
              error: str | None = None) -> SessionOutcome:
    complete = total > 0 and done == total and error is None
    outcome = SessionOutcome(
        complete=complete,
        completion_fraction=(done / total) if total else 0.0,
        total_cost=session.capacity_plan.total_cost if session.capacity_plan else None,
        error=error,
    )
    session.outcome = outcome
    session.artifacts["report.md"] = ""  # placeholder so the inventory lists it
    session.artifacts["report.md"] = render_report(session)
    outcome.artifact_names = tuple(sorted(session.artifacts))
    session.say("executor", f"session finished: complete={str(complete).lower()}, "
                            f"fraction={outcome.completion_fraction:g}")
    return outcome


def run_session(session: SessionState, mode: str, backend, strategy=None,
                approver=None) -> SessionOutcome:
    """Drive analyze -> plan -> steps.

    Checkpoint mode consults ``approver(step)`` before each step: None
    approves as-is, a dict of field changes approves-with-edit (one HI).
    Extraction failures and replay misses halt the run with an incomplete
    outcome carrying the completed-step fraction.
    """
    if mode not in ("auto", "checkpoint"):
        raise ValueError(f"mode must be auto or checkpoint, got {mode!r}")
    session.mode = mode
    session.gateway = backend

    try:
        if session.report is None:
            session.report = analyze(session.request, backend, strategy,
                                      session.registry, transcript=session.transcript)
        if session.plan is None:
            session.plan = make_plan(session.report, session.request, backend,
                                     strategy, session.registry, transcript=session.transcript)
    except (ExtractionFailedError, GatewayError, ReplayMissError, InfeasibleReportError) as exc:
        outcome = SessionOutcome(complete=False, completion_fraction=0.0,
                                 error=f"{type(exc).__name__}: {exc}")
        session.outcome = outcome
        return outcome

    total = len(session.plan.steps)
    done = 0
    for step in session.plan.steps:
        if mode == "checkpoint" and step.status == "pending":
            changes = approver(step) if approver is not None else None
            if changes:
                edit_plan(session, [{"step_id": step.id, **changes}])
            else:
                step.status = "approved"
        result = run_step(session, step)
        if result.status != "done":
            return _finalize(session, done, total, error=result.error)
        done += 1
    return _finalize(session, done, total)


def what_if(session: SessionState, action: Action) -> dict:
    """Re-solve and re-render on an action-modified copy of the topology.

    The base session's topology and plan stay untouched; the comparison
    (costs, utilizations, renders) lands in session.whatifs and counts as
    one human intervention.
    """
    if session.capacity_plan is None or session.topology is None or session.traffic is None:
        raise IllegalTransitionError("what-if requires a completed solve step")
    new_topology = apply_action(session.topology, action)  # NotFoundError leaves state alone

    problem = _problem_from(session, new_topology, session.solve_args)
    new_plan = optimize(problem)
    spec = session.defaults.render_spec
    dot = render_dot(new_topology, new_plan, spec)
    svg = dot_to_svg(dot, spec)
    session.artifacts["whatif_plan.json"] = plan_to_json(new_plan, session.traffic)
    session.artifacts["whatif_topology.dot"] = dot
    session.artifacts["whatif_topology.svg"] = svg

    cost_model = session.defaults.cost
    if hasattr(action, "length_km"):
        capex = cost_model.fiber_fixed_cost + action.length_km * cost_model.fiber_cost_per_km
    else:
        capex = action.extra_modules * cost_model.module_cost
    old_plan = session.capacity_plan
    comparison = {
        "action": action_to_dict(action),
        "old_cost": old_plan.total_cost,
        "new_cost": new_plan.total_cost,
        "cost_delta": new_plan.total_cost - old_plan.total_cost,
        "action_capex": capex,
        "old_max_utilization": max(old_plan.utilization.values(), default=0.0),
        "new_max_utilization": max(new_plan.utilization.values(), default=0.0),
        "artifacts": ["whatif_plan.json", "whatif_topology.dot", "whatif_topology.svg"],
    }
    session.whatifs.append(comparison)
    session.hi_count += 1
    session.say("operator", f"HI what_if: {comparison['action']['type']} "
                            f"(cost {old_plan.total_cost} -> {new_plan.total_cost})")
    return comparison


# ---------------------------------------------------------------------------
# plan serialization (service snapshots, golden plans for evaluation)


def step_to_dict(step: Step) -> dict:
    return {
        "id": step.id, "description": step.description, "control": step.control,
        "count": step.loop_count, "action": step.action, "tool": step.tool,
        "args": dict(step.args), "status": step.status, "result_ref": step.result_ref,
    }


def plan_to_dict(plan: Plan) -> dict:
    return {"steps": [step_to_dict(s) for s in plan.steps]}


def plan_from_dict(doc: dict) -> Plan:
    steps = []
    for raw in doc["steps"]:
        step = _step_from_doc(raw)
        step.status = raw.get("status", "pending")
        step.result_ref = raw.get("result_ref")
        steps.append(step)
    return Plan(steps=steps)
