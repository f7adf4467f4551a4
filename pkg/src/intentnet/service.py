"""HTTP session service with JSONL event persistence.

One append-only event file per session under ``data_dir/sessions/``; every
state transition is an event, and folding a session's log reproduces the
exact snapshot the live session holds (event-sourcing soundness, tested).
Commands on one session are serialized behind a lock; distinct sessions
run concurrently.  Backend credentials are only ever named by environment
variable and never enter event payloads.
"""

from __future__ import annotations

import asyncio
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import evaluation, pipeline
from .errors import (
    CorruptLogError,
    IllegalTransitionError,
    IntentNetError,
    NotFoundError,
)
from .gateway import Backend, backend_from_config
from .netmodel import action_from_dict
from .rag import VectorStore
from .solver import CostModel

EVENT_KINDS = ("request", "analysis", "plan", "step_started", "step_done", "step_failed",
               "edit", "approval", "what_if", "outcome", "eval")


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    timestamp: str
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass
class ServiceConfig:
    data_dir: Path
    backend: Backend
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    cost: CostModel = field(default_factory=CostModel)
    u_max: float = 0.8
    rag_dir: Path | None = None
    console_dir: Path | None = None  # optional static mount for the web console

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        if not (0 < self.u_max <= 1):
            raise ValueError("u_max must lie in (0, 1]")


def load_config(path: str | Path) -> ServiceConfig:
    """Read a TOML or JSON config file into a ServiceConfig."""
    path = Path(path)
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # tomllib is 3.11+, fall back on the backport
            import tomli as tomllib

        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        doc = json.loads(path.read_text(encoding="utf-8"))
    cost_doc = doc.get("cost", {})
    return ServiceConfig(
        data_dir=path.parent / doc.get("data_dir", "data"),
        backend=backend_from_config(doc["backend"], base_dir=path.parent),
        listen_host=doc.get("listen_host", "127.0.0.1"),
        listen_port=int(doc.get("listen_port", 8080)),
        cost=CostModel(
            module_cost=float(cost_doc.get("module_cost", 1.0)),
            fiber_cost_per_km=float(cost_doc.get("fiber_cost_per_km", 1.0)),
            fiber_fixed_cost=float(cost_doc.get("fiber_fixed_cost", 0.0)),
            currency=cost_doc.get("currency", "unit"),
        ),
        u_max=float(doc.get("u_max", 0.8)),
        rag_dir=(path.parent / doc["rag_dir"]) if "rag_dir" in doc else None,
        console_dir=(path.parent / doc["console_dir"]) if "console_dir" in doc else None,
    )


# ---------------------------------------------------------------------------
# snapshots (the observable state events must reconstruct)


def _request_to_dict(request: pipeline.AnalysisRequest) -> dict:
    return {"task_text": request.task_text, "state_text": request.state_text,
            "constraint_text": request.constraint_text,
            "attachments": list(request.attachments)}


def _report_to_dict(report: pipeline.AnalysisReport | None) -> dict | None:
    if report is None:
        return None
    return {"feasible": report.feasible, "concepts": list(report.concepts),
            "required_tools": list(report.required_tools), "rationale": report.rationale,
            "warnings": list(report.warnings)}


def _result_to_dict(result: pipeline.StepResult) -> dict:
    return {"step_id": result.step_id, "status": result.status, "summary": result.summary,
            "data": result.data, "error": result.error,
            "artifact_names": list(result.artifact_names)}


def _outcome_to_dict(outcome: pipeline.SessionOutcome | None) -> dict | None:
    if outcome is None:
        return None
    return {"complete": outcome.complete, "completion_fraction": outcome.completion_fraction,
            "total_cost": outcome.total_cost, "artifact_names": list(outcome.artifact_names),
            "error": outcome.error}


def snapshot(session: pipeline.SessionState) -> dict:
    """Everything a client (or the replay fold) can observe about a session."""
    return {
        "id": session.id,
        "mode": session.mode,
        "request": _request_to_dict(session.request),
        "report": _report_to_dict(session.report),
        "plan": pipeline.plan_to_dict(session.plan) if session.plan else None,
        "hi_count": session.hi_count,
        "step_results": {str(k): _result_to_dict(v) for k, v in session.step_results.items()},
        "artifacts": dict(session.artifacts),
        "transcript": [dict(m) for m in session.transcript],
        "whatifs": [dict(w) for w in session.whatifs],
        "outcome": _outcome_to_dict(session.outcome),
    }


# ---------------------------------------------------------------------------
# session manager


class _Holder:
    def __init__(self, session: pipeline.SessionState):
        self.session = session
        self.events: list[SessionEvent] = []
        self.lock = threading.Lock()
        self.transcript_mark = 0
        self.artifact_mark: set[str] = set()


class SessionManager:
    """Owns live sessions, their event logs, and the eval record store."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.sessions: dict[str, _Holder] = {}
        self.sessions_dir = config.data_dir / "sessions"
        self.artifacts_dir = config.data_dir / "artifacts"
        self.eval_path = config.data_dir / "eval_records.jsonl"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts_dir.mkdir(parents=True, exist_ok=True)
        self._rag_store: VectorStore | None = None
        if config.rag_dir is not None and Path(config.rag_dir).is_dir():
            self._rag_store = VectorStore()
            self._rag_store.ingest_dir(config.rag_dir)

    # -- event plumbing ----------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def _emit(self, holder: _Holder, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(
            seq=len(holder.events) + 1,
            timestamp=datetime.now(timezone.utc).isoformat(),
            kind=kind,
            payload=payload,
        )
        holder.events.append(event)
        with open(self._log_path(holder.session.id), "a", encoding="utf-8") as sink:
            sink.write(json.dumps({
                "seq": event.seq, "timestamp": event.timestamp,
                "kind": event.kind, "payload": event.payload,
            }, sort_keys=True) + "\n")
        return event

    def _deltas(self, holder: _Holder) -> dict:
        """Transcript entries and artifacts added since the last event."""
        session = holder.session
        transcript_delta = [dict(m) for m in session.transcript[holder.transcript_mark:]]
        holder.transcript_mark = len(session.transcript)
        new_names = [n for n in session.artifacts if n not in holder.artifact_mark]
        changed = {n: session.artifacts[n] for n in new_names}
        # report.md gets rewritten on every finalize; treat rewrites as changes
        for name in holder.artifact_mark:
            if name in session.artifacts and name not in changed:
                disk = self._artifact_path(session.id, name)
                if not disk.exists() or disk.read_text(encoding="utf-8") != session.artifacts[name]:
                    changed[name] = session.artifacts[name]
        holder.artifact_mark = set(session.artifacts)
        self._persist_artifacts(session.id, changed)
        return {"transcript_delta": transcript_delta, "artifacts": changed}

    def _artifact_path(self, session_id: str, name: str) -> Path:
        return self.artifacts_dir / session_id / name

    def _persist_artifacts(self, session_id: str, artifacts: dict[str, str]) -> None:
        if not artifacts:
            return
        directory = self.artifacts_dir / session_id
        directory.mkdir(parents=True, exist_ok=True)
        for name, content in artifacts.items():
            (directory / name).write_text(content, encoding="utf-8")

    # -- commands ------------------------------------------------------------

    def create_session(self, body: dict) -> pipeline.SessionState:
        task_text = body.get("task_text", "")
        if not isinstance(task_text, str) or not task_text:
            raise ValueError("task_text must be a non-empty string")
        attachments = body.get("attachments", [])
        for name in attachments:
            pipeline.resolve_attachment(self.config.data_dir, name)  # NotFoundError -> 404ish
        request = pipeline.AnalysisRequest(
            task_text=task_text,
            state_text=body.get("state_text", ""),
            constraint_text=body.get("constraint_text", ""),
            attachments=tuple(attachments),
        )
        defaults = pipeline.PipelineDefaults(
            u_max=self.config.u_max, cost=self.config.cost, rag_store=self._rag_store)
        session = pipeline.new_session(request, base_dir=self.config.data_dir, defaults=defaults)
        session.mode = body.get("mode", "auto")
        holder = _Holder(session)
        self.sessions[session.id] = holder
        with holder.lock:
            payload = {"request": _request_to_dict(request), "mode": session.mode}
            payload.update(self._deltas(holder))
            self._emit(holder, "request", payload)
        return session

    def _holder(self, session_id: str) -> _Holder:
        holder = self.sessions.get(session_id)
        if holder is None:
            raise NotFoundError(f"no session {session_id!r}")
        return holder

    def advance(self, session_id: str, command: dict) -> dict:
        holder = self._holder(session_id)
        with holder.lock:
            kind = command.get("command")
            if kind == "run_auto":
                self._run(holder, "auto")
            elif kind == "run_checkpoint":
                self._run(holder, "checkpoint")
            elif kind == "approve_step":
                self._approve(holder, command)
            elif kind == "edit":
                self._edit(holder, command)
            elif kind == "what_if":
                self._what_if(holder, command)
            else:
                raise ValueError(f"unknown command {kind!r}")
            return snapshot(holder.session)

    def _run(self, holder: _Holder, mode: str) -> None:
        session = holder.session
        if session.outcome is not None:
            raise IllegalTransitionError("session already has an outcome")
        if session.plan is not None and mode == "auto" and any(
                s.status not in ("pending", "approved", "edited") for s in session.plan.steps):
            raise IllegalTransitionError("session already started")
        session.mode = mode
        session.gateway = self.config.backend

        try:
            if session.report is None:
                session.report = pipeline.analyze(
                    session.request, self.config.backend, registry=session.registry,
                    transcript=session.transcript)
                payload = {"report": _report_to_dict(session.report)}
                payload.update(self._deltas(holder))
                self._emit(holder, "analysis", payload)
            if session.plan is None:
                session.plan = pipeline.make_plan(
                    session.report, session.request, self.config.backend,
                    registry=session.registry, transcript=session.transcript)
                payload = {"plan": pipeline.plan_to_dict(session.plan)}
                payload.update(self._deltas(holder))
                self._emit(holder, "plan", payload)
        except IntentNetError as exc:
            session.outcome = pipeline.SessionOutcome(
                complete=False, completion_fraction=0.0, error=f"{type(exc).__name__}: {exc}")
            payload = {"outcome": _outcome_to_dict(session.outcome)}
            payload.update(self._deltas(holder))
            self._emit(holder, "outcome", payload)
            return

        if mode == "auto":
            for step in session.plan.steps:
                if step.status == "done":
                    continue
                self._execute_step(holder, step)
                if step.status == "failed":
                    break
            self._finalize_if_ready(holder)

    def _execute_step(self, holder: _Holder, step: pipeline.Step) -> pipeline.StepResult:
        session = holder.session
        self._emit(holder, "step_started", {"step_id": step.id})
        result = pipeline.run_step(session, step)
        payload = {"step_id": step.id, "result": _result_to_dict(result), "status": step.status}
        payload.update(self._deltas(holder))
        self._emit(holder, "step_done" if result.status == "done" else "step_failed", payload)
        return result

    def _finalize_if_ready(self, holder: _Holder) -> None:
        session = holder.session
        if session.outcome is not None:
            return
        outcome = pipeline._maybe_finalize(session)
        if outcome is not None:
            payload = {"outcome": _outcome_to_dict(outcome)}
            payload.update(self._deltas(holder))
            self._emit(holder, "outcome", payload)

    def _approve(self, holder: _Holder, command: dict) -> None:
        session = holder.session
        if session.plan is None:
            raise IllegalTransitionError("no plan yet; run the session first")
        step_id = int(command.get("step_id", -1))
        changes = command.get("changes") or None
        step = session.plan.step(step_id)  # NotFoundError for bad ids
        if changes:
            pipeline.edit_plan(session, [{"step_id": step_id, **changes}])
            payload = {"edits": [{"step_id": step_id, **changes}],
                       "plan": pipeline.plan_to_dict(session.plan), "hi_count": session.hi_count}
            payload.update(self._deltas(holder))
            self._emit(holder, "edit", payload)
        else:
            step.status = "approved" if step.status == "pending" else step.status
        payload = {"step_id": step_id, "with_changes": bool(changes)}
        payload.update(self._deltas(holder))
        self._emit(holder, "approval", payload)
        self._execute_step(holder, step)
        self._finalize_if_ready(holder)

    def _edit(self, holder: _Holder, command: dict) -> None:
        session = holder.session
        edits = command.get("edits") or []
        pipeline.edit_plan(session, edits)
        payload = {"edits": edits, "plan": pipeline.plan_to_dict(session.plan),
                   "hi_count": session.hi_count}
        payload.update(self._deltas(holder))
        self._emit(holder, "edit", payload)

    def _what_if(self, holder: _Holder, command: dict) -> None:
        session = holder.session
        action = action_from_dict(command.get("action") or {})
        comparison = pipeline.what_if(session, action)
        payload = {"comparison": comparison, "hi_count": session.hi_count}
        payload.update(self._deltas(holder))
        self._emit(holder, "what_if", payload)
        self._emit(holder, "outcome", {"outcome": _outcome_to_dict(session.outcome),
                                       "comparison": comparison,
                                       "transcript_delta": [], "artifacts": {}})

    # -- queries -------------------------------------------------------------

    def get_snapshot(self, session_id: str) -> dict:
        return snapshot(self._holder(session_id).session)

    def events_after(self, session_id: str, after: int) -> list[SessionEvent]:
        holder = self._holder(session_id)
        return [e for e in holder.events if e.seq > after]

    def artifact(self, session_id: str, name: str) -> str:
        holder = self._holder(session_id)
        if name not in holder.session.artifacts:
            raise NotFoundError(f"session {session_id} has no artifact {name!r}")
        return holder.session.artifacts[name]

    # -- replay ----------------------------------------------------------------

    def replay_session(self, session_id: str) -> dict:
        """Fold the persisted event log back into a state snapshot."""
        path = self._log_path(session_id)
        if not path.exists():
            raise NotFoundError(f"no event log for session {session_id!r}")
        lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]
        if not lines:
            raise NotFoundError(f"event log for {session_id!r} is empty")
        events = []
        for line in lines:
            doc = json.loads(line)
            events.append(SessionEvent(seq=doc["seq"], timestamp=doc["timestamp"],
                                       kind=doc["kind"], payload=doc["payload"]))
        for i, event in enumerate(events, start=1):
            if event.seq != i:
                raise CorruptLogError(f"expected seq {i}, found {event.seq}")
        return fold_events(session_id, events)


def fold_events(session_id: str, events: list[SessionEvent]) -> dict:
    """Event-sourced reconstruction: events in, snapshot out."""
    state = {
        "id": session_id, "mode": "auto", "request": None, "report": None, "plan": None,
        "hi_count": 0, "step_results": {}, "artifacts": {}, "transcript": [],
        "whatifs": [], "outcome": None,
    }

    def absorb(payload: dict):
        state["transcript"].extend(payload.get("transcript_delta", []))
        state["artifacts"].update(payload.get("artifacts", {}))

    for event in events:
        payload = event.payload
        if event.kind == "request":
            state["request"] = payload["request"]
            state["mode"] = payload.get("mode", "auto")
            absorb(payload)
        elif event.kind == "analysis":
            state["report"] = payload["report"]
            absorb(payload)
        elif event.kind == "plan":
            state["plan"] = payload["plan"]
            absorb(payload)
        elif event.kind == "step_started":
            if state["plan"]:
                for step in state["plan"]["steps"]:
                    if step["id"] == payload["step_id"]:
                        step["status"] = "running"
        elif event.kind in ("step_done", "step_failed"):
            result = payload["result"]
            state["step_results"][str(payload["step_id"])] = result
            if state["plan"]:
                for step in state["plan"]["steps"]:
                    if step["id"] == payload["step_id"]:
                        step["status"] = payload["status"]
                        names = result.get("artifact_names") or []
                        step["result_ref"] = names[0] if names else step.get("result_ref")
            absorb(payload)
        elif event.kind == "edit":
            state["plan"] = payload["plan"]
            state["hi_count"] = payload["hi_count"]
            absorb(payload)
        elif event.kind == "approval":
            if not payload.get("with_changes") and state["plan"]:
                for step in state["plan"]["steps"]:
                    if step["id"] == payload["step_id"] and step["status"] == "pending":
                        step["status"] = "approved"
            absorb(payload)
        elif event.kind == "what_if":
            state["whatifs"].append(payload["comparison"])
            state["hi_count"] = payload["hi_count"]
            absorb(payload)
        elif event.kind == "outcome":
            state["outcome"] = payload["outcome"]
            absorb(payload)
        elif event.kind == "eval":
            absorb(payload)
    return state


# ---------------------------------------------------------------------------
# FastAPI surface


class CreateSessionBody(BaseModel):
    task_text: str
    state_text: str = ""
    constraint_text: str = ""
    attachments: list[str] = []
    mode: str = "auto"


class AdvanceBody(BaseModel):
    command: str
    step_id: int | None = None
    changes: dict | None = None
    edits: list[dict] | None = None
    action: dict | None = None


class EvalRecordBody(BaseModel):
    module: str
    method: str
    score: float
    hi: int = 0
    task_id: str = ""
    evaluator: str = "human"
    notes: str = ""


_ARTIFACT_MEDIA = {
    ".svg": "image/svg+xml",
    ".json": "application/json",
    ".md": "text/markdown; charset=utf-8",
    ".dot": "text/plain; charset=utf-8",
}


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="intentnet session service")
    manager = SessionManager(config)
    app.state.manager = manager

    def _http(exc: Exception) -> HTTPException:
        if isinstance(exc, NotFoundError):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, IllegalTransitionError):
            return HTTPException(status_code=409, detail=str(exc))
        return HTTPException(status_code=400, detail=str(exc))

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            session = manager.create_session(body.model_dump())
        except (IntentNetError, ValueError) as exc:
            raise _http(exc) from exc
        return {"id": session.id}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return manager.get_snapshot(session_id)
        except IntentNetError as exc:
            raise _http(exc) from exc

    @app.post("/api/sessions/{session_id}/advance")
    def advance(session_id: str, body: AdvanceBody):
        try:
            return manager.advance(session_id, body.model_dump())
        except (IntentNetError, ValueError) as exc:
            raise _http(exc) from exc

    @app.get("/api/sessions/{session_id}/events")
    async def events(session_id: str, after: int = Query(default=0),
                     wait_s: float = Query(default=0.0, le=30.0)):
        try:
            batch = manager.events_after(session_id, after)
            deadline = asyncio.get_event_loop().time() + wait_s
            while not batch and asyncio.get_event_loop().time() < deadline:  # long-poll
                await asyncio.sleep(0.05)
                batch = manager.events_after(session_id, after)
        except IntentNetError as exc:
            raise _http(exc) from exc
        return [{"seq": e.seq, "timestamp": e.timestamp, "kind": e.kind, "payload": e.payload}
                for e in batch]

    @app.get("/api/sessions/{session_id}/events/stream")
    async def events_stream(session_id: str, after: int = Query(default=0)):
        try:
            manager._holder(session_id)
        except IntentNetError as exc:
            raise _http(exc) from exc

        async def generator():
            cursor = after
            idle = 0
            while idle < 300:  # stop a quiet stream after ~30 s
                batch = manager.events_after(session_id, cursor)
                if batch:
                    idle = 0
                    for event in batch:
                        cursor = event.seq
                        doc = {"seq": event.seq, "kind": event.kind, "payload": event.payload}
                        yield f"id: {event.seq}\ndata: {json.dumps(doc, sort_keys=True)}\n\n"
                    if manager._holder(session_id).session.outcome is not None:
                        return
                else:
                    idle += 1
                    await asyncio.sleep(0.1)

        return StreamingResponse(generator(), media_type="text/event-stream")

    @app.get("/api/sessions/{session_id}/artifacts/{name}")
    def artifact(session_id: str, name: str):
        try:
            content = manager.artifact(session_id, name)
        except IntentNetError as exc:
            raise _http(exc) from exc
        media = _ARTIFACT_MEDIA.get(Path(name).suffix, "text/plain; charset=utf-8")
        return Response(content=content, media_type=media)

    @app.get("/api/eval/report")
    def eval_report(format: str = Query(default="csv")):
        if format not in ("csv", "json"):
            raise HTTPException(status_code=400, detail="format must be csv or json")
        records = evaluation.read_records(manager.eval_path)
        summary = evaluation.aggregate(records)
        text = evaluation.export_report(summary, format)
        media = "text/csv; charset=utf-8" if format == "csv" else "application/json"
        return Response(content=text, media_type=media)

    @app.post("/api/eval/records", status_code=201)
    def post_eval_record(body: EvalRecordBody):
        try:
            record = evaluation.EvalRecord(**body.model_dump())
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        evaluation.append_record(manager.eval_path, record)
        return {"stored": True}

    if config.console_dir is not None and Path(config.console_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.console_dir, html=True), name="console")

    return app
