// Plan board: one card per step, statuses verbatim from the service,
// approve/edit controls only where the service would accept them
// (checkpoint mode, steps still awaiting a decision).

import { escapeHtml, money, percent } from "./format.js";
import type { SessionView } from "./state.js";
import type { StepDoc } from "./types.js";

const ACTIONABLE: ReadonlySet<string> = new Set(["pending"]);

export function renderHiBadge(hiCount: number): string {
  return `<span class="hi-badge" data-testid="hi-badge" title="human interventions">HI ${hiCount}</span>`;
}

function renderStepCard(step: StepDoc, checkpoint: boolean): string {
  const actionable = checkpoint && ACTIONABLE.has(step.status);
  const controls = actionable
    ? `<div class="card-controls">
        <button data-action="approve" data-step="${step.id}">Approve</button>
        <button data-action="edit" data-step="${step.id}">Edit &amp; approve</button>
      </div>`
    : "";
  const tool = step.tool ? `<code>${escapeHtml(step.tool)}</code>` : "<em>none</em>";
  const args = Object.keys(step.args).length
    ? `<pre class="args">${escapeHtml(JSON.stringify(step.args))}</pre>`
    : "";
  return `<div class="step-card status-${step.status}" data-step-id="${step.id}">
    <header>
      <span class="step-id">#${step.id}</span>
      <span class="step-status" data-testid="status-${step.id}">${step.status}</span>
    </header>
    <p>${escapeHtml(step.description)}</p>
    <dl><dt>action</dt><dd>${escapeHtml(step.action)}</dd><dt>tool</dt><dd>${tool}</dd></dl>
    ${args}${controls}
  </div>`;
}

export function renderBoard(view: SessionView): string {
  const checkpoint = view.mode === "checkpoint";
  const header = `<header class="board-header">
    <h2>Plan board</h2>
    ${renderHiBadge(view.hiCount)}
    <span class="mode">${escapeHtml(view.mode)} mode</span>
  </header>`;

  if (!view.plan) {
    return `${header}<p class="empty">No plan yet. ${
      checkpoint ? "Run the session to ask the planner for steps." : "Start the session."
    }</p>`;
  }

  const cards = view.plan.steps.map((s) => renderStepCard(s, checkpoint)).join("\n");
  const allDone = view.plan.steps.every((s) => s.status === "done");
  const outcome = view.outcome
    ? `<aside class="outcome ${view.outcome.complete ? "complete" : "incomplete"}" data-testid="outcome">
        <h3>${view.outcome.complete ? "Session complete" : "Session incomplete"}</h3>
        <p>steps ${percent(view.outcome.completion_fraction)} · total cost ${money(view.outcome.total_cost)}</p>
        ${view.outcome.error ? `<p class="error">${escapeHtml(view.outcome.error)}</p>` : ""}
      </aside>`
    : "";
  return `${header}<div class="board ${allDone ? "all-done" : ""}">${cards}</div>${outcome}`;
}

export function renderTranscript(view: SessionView): string {
  const rows = view.transcript
    .map((m) => `<li class="role-${escapeHtml(m.role)}"><b>${escapeHtml(m.role)}</b> ${escapeHtml(m.content)}</li>`)
    .join("\n");
  return `<details class="transcript" open><summary>Transcript (${view.transcript.length})</summary><ul>${rows}</ul></details>`;
}
