// Session view state: a fold over service events, reconcilable against a
// fresh snapshot at any time. Statuses and numbers are copied verbatim from
// service payloads; reconnect convergence (fold == fresh snapshot) is a
// tested invariant, and the subscription resumes with after=lastSeq so no
// event is applied twice.

import type {
  Comparison,
  OutcomeDoc,
  PlanDoc,
  ReportDoc,
  RequestDoc,
  SessionEvent,
  Snapshot,
  TranscriptEntry,
} from "./types.js";

export interface SessionView {
  id: string;
  mode: string;
  request: RequestDoc | null;
  report: ReportDoc | null;
  plan: PlanDoc | null;
  hiCount: number;
  artifacts: string[]; // names, sorted; content is fetched on demand
  transcript: TranscriptEntry[];
  whatifs: Comparison[];
  outcome: OutcomeDoc | null;
  lastSeq: number;
}

export function emptyView(id: string): SessionView {
  return {
    id, mode: "auto", request: null, report: null, plan: null, hiCount: 0,
    artifacts: [], transcript: [], whatifs: [], outcome: null, lastSeq: 0,
  };
}

export function fromSnapshot(snapshot: Snapshot, lastSeq = 0): SessionView {
  return {
    id: snapshot.id,
    mode: snapshot.mode,
    request: snapshot.request,
    report: snapshot.report,
    plan: snapshot.plan ? clonePlan(snapshot.plan) : null,
    hiCount: snapshot.hi_count,
    artifacts: Object.keys(snapshot.artifacts).sort(),
    transcript: [...snapshot.transcript],
    whatifs: [...snapshot.whatifs],
    outcome: snapshot.outcome,
    lastSeq,
  };
}

function clonePlan(plan: PlanDoc): PlanDoc {
  return { steps: plan.steps.map((s) => ({ ...s, args: { ...s.args } })) };
}

function absorbDeltas(view: SessionView, payload: Record<string, unknown>): void {
  const transcriptDelta = payload["transcript_delta"] as TranscriptEntry[] | undefined;
  if (transcriptDelta) view.transcript.push(...transcriptDelta);
  const artifacts = payload["artifacts"] as Record<string, string> | undefined;
  if (artifacts) {
    const names = new Set(view.artifacts);
    for (const name of Object.keys(artifacts)) names.add(name);
    view.artifacts = [...names].sort();
  }
}

/** Apply one event in seq order; stale or duplicate events are ignored. */
export function applyEvent(view: SessionView, event: SessionEvent): SessionView {
  if (event.seq <= view.lastSeq) return view;
  const next: SessionView = {
    ...view,
    plan: view.plan ? clonePlan(view.plan) : null,
    artifacts: [...view.artifacts],
    transcript: [...view.transcript],
    whatifs: [...view.whatifs],
    lastSeq: event.seq,
  };
  const payload = event.payload;

  switch (event.kind) {
    case "request":
      next.request = payload["request"] as RequestDoc;
      next.mode = (payload["mode"] as string) ?? next.mode;
      break;
    case "analysis":
      next.report = payload["report"] as ReportDoc;
      break;
    case "plan":
    case "edit":
      next.plan = clonePlan(payload["plan"] as PlanDoc);
      if (typeof payload["hi_count"] === "number") next.hiCount = payload["hi_count"];
      break;
    case "step_started":
      setStatus(next, payload["step_id"] as number, "running");
      break;
    case "step_done":
    case "step_failed":
      setStatus(next, payload["step_id"] as number, payload["status"] as string);
      break;
    case "approval":
      if (!payload["with_changes"]) {
        setStatusIf(next, payload["step_id"] as number, "pending", "approved");
      }
      break;
    case "what_if":
      next.whatifs.push(payload["comparison"] as Comparison);
      if (typeof payload["hi_count"] === "number") next.hiCount = payload["hi_count"];
      break;
    case "outcome":
      next.outcome = payload["outcome"] as OutcomeDoc;
      break;
    default:
      break; // unknown event kinds are service additions; ignore, never invent
  }
  absorbDeltas(next, payload);
  return next;
}

export function applyEvents(view: SessionView, events: SessionEvent[]): SessionView {
  return events.reduce(applyEvent, view);
}

function setStatus(view: SessionView, stepId: number, status: string): void {
  const step = view.plan?.steps.find((s) => s.id === stepId);
  if (step) step.status = status as typeof step.status;
}

function setStatusIf(view: SessionView, stepId: number, from: string, to: string): void {
  const step = view.plan?.steps.find((s) => s.id === stepId);
  if (step && step.status === from) step.status = to as typeof step.status;
}

/** Fields that must agree between a folded view and a fresh snapshot. */
export function comparable(view: SessionView): unknown {
  return {
    report: view.report,
    steps: view.plan?.steps.map((s) => ({ id: s.id, status: s.status })) ?? null,
    hiCount: view.hiCount,
    artifacts: view.artifacts,
    transcript: view.transcript,
    whatifs: view.whatifs,
    outcome: view.outcome,
  };
}
