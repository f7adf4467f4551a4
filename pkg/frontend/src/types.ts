// Wire types mirroring the session service's JSON surface.
// The console never invents state: everything here is service truth.

export type StepStatus = "pending" | "approved" | "running" | "done" | "failed" | "edited";

export interface StepDoc {
  id: number;
  description: string;
  control: string;
  count: number;
  action: string;
  tool: string | null;
  args: Record<string, unknown>;
  status: StepStatus;
  result_ref: string | null;
}

export interface PlanDoc {
  steps: StepDoc[];
}

export interface RequestDoc {
  task_text: string;
  state_text: string;
  constraint_text: string;
  attachments: string[];
}

export interface ReportDoc {
  feasible: boolean;
  concepts: string[];
  required_tools: string[];
  rationale: string;
  warnings: string[];
}

export interface OutcomeDoc {
  complete: boolean;
  completion_fraction: number;
  total_cost: number | null;
  artifact_names: string[];
  error: string | null;
}

export interface TranscriptEntry {
  role: string;
  content: string;
}

export interface Comparison {
  action: Record<string, unknown>;
  old_cost: number;
  new_cost: number;
  cost_delta: number;
  action_capex: number;
  old_max_utilization: number;
  new_max_utilization: number;
  artifacts: string[];
}

export interface StepResultDoc {
  step_id: number;
  status: "done" | "failed";
  summary: string;
  data: Record<string, unknown>;
  error: string | null;
  artifact_names: string[];
}

export interface Snapshot {
  id: string;
  mode: string;
  request: RequestDoc;
  report: ReportDoc | null;
  plan: PlanDoc | null;
  hi_count: number;
  step_results: Record<string, StepResultDoc>;
  artifacts: Record<string, string>;
  transcript: TranscriptEntry[];
  whatifs: Comparison[];
  outcome: OutcomeDoc | null;
}

export interface SessionEvent {
  seq: number;
  timestamp?: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface EvalCell {
  module: string;
  method: string;
  mean_score: number;
  mean_hi: number;
  n: number;
}

export interface EvalReport {
  cells: EvalCell[];
  hlp_accuracy: number | null;
  completion_rate: number | null;
}

export type WhatIfAction =
  | { type: "add_capacity"; ip_link_id: string; extra_modules: number }
  | { type: "add_fiber"; a: string; b: string; length_km: number };
