// Typed client for the session service. The fetch function is injectable
// so tests can run against a scripted transport instead of a live server.

import type { EvalReport, SessionEvent, Snapshot, WhatIfAction } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface CreateSessionBody {
  task_text: string;
  state_text?: string;
  constraint_text?: string;
  attachments?: string[];
  mode?: "auto" | "checkpoint";
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(body: CreateSessionBody): Promise<{ id: string }> {
    return this.post("/api/sessions", body);
  }

  getSession(id: string): Promise<Snapshot> {
    return this.request(`/api/sessions/${id}`);
  }

  events(id: string, after = 0, waitS = 0): Promise<SessionEvent[]> {
    const wait = waitS > 0 ? `&wait_s=${waitS}` : "";
    return this.request(`/api/sessions/${id}/events?after=${after}${wait}`);
  }

  runAuto(id: string): Promise<Snapshot> {
    return this.post(`/api/sessions/${id}/advance`, { command: "run_auto" });
  }

  runCheckpoint(id: string): Promise<Snapshot> {
    return this.post(`/api/sessions/${id}/advance`, { command: "run_checkpoint" });
  }

  approveStep(id: string, stepId: number, changes?: Record<string, unknown>): Promise<Snapshot> {
    return this.post(`/api/sessions/${id}/advance`, {
      command: "approve_step",
      step_id: stepId,
      ...(changes ? { changes } : {}),
    });
  }

  editPlan(id: string, edits: Record<string, unknown>[]): Promise<Snapshot> {
    return this.post(`/api/sessions/${id}/advance`, { command: "edit", edits });
  }

  whatIf(id: string, action: WhatIfAction): Promise<Snapshot> {
    return this.post(`/api/sessions/${id}/advance`, { command: "what_if", action });
  }

  async artifact(id: string, name: string): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/api/sessions/${id}/artifacts/${name}`);
    if (!response.ok) throw new ServiceError(response.status, `no artifact ${name}`);
    return response.text();
  }

  evalReport(): Promise<EvalReport> {
    return this.request("/api/eval/report?format=json");
  }

  postEvalRecord(record: {
    module: string;
    method: string;
    score: number;
    hi?: number;
    task_id?: string;
    notes?: string;
  }): Promise<{ stored: boolean }> {
    return this.post("/api/eval/records", { evaluator: "human", ...record });
  }
}
