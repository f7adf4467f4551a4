// Evaluation dashboard: grouped bars (one group per module, one bar per
// prompt method) with mean human-intervention counts overlaid as markers,
// plus the human-score entry form. All numbers come verbatim from
// /api/eval/report; only the chart geometry is computed here.

import { escapeHtml } from "./format.js";
import type { EvalCell, EvalReport } from "./types.js";

export const MODULES = ["analyzer", "planner", "calculator", "executor"] as const;
export const METHODS = ["zero_shot", "few_shot", "cot", "rag"] as const;

const METHOD_COLORS: Record<string, string> = {
  zero_shot: "#8ecae6",
  few_shot: "#219ebc",
  cot: "#fb8500",
  rag: "#606c38",
};

export interface Bar {
  module: string;
  method: string;
  x: number;
  y: number;
  width: number;
  height: number;
  meanScore: number;
  meanHi: number;
}

const CHART = { width: 640, height: 280, padLeft: 40, padBottom: 40, padTop: 20 };

/** Pure geometry: cells -> positioned bars (score scaled into [0,1] axis). */
export function layoutBars(cells: EvalCell[]): Bar[] {
  const plotW = CHART.width - CHART.padLeft - 10;
  const plotH = CHART.height - CHART.padTop - CHART.padBottom;
  const groupW = plotW / MODULES.length;
  const barW = (groupW * 0.8) / METHODS.length;
  const bars: Bar[] = [];
  for (const cell of cells) {
    const gi = MODULES.indexOf(cell.module as (typeof MODULES)[number]);
    const mi = METHODS.indexOf(cell.method as (typeof METHODS)[number]);
    if (gi < 0 || mi < 0) continue; // unknown rows are never drawn with made-up positions
    const height = cell.mean_score * plotH;
    bars.push({
      module: cell.module,
      method: cell.method,
      x: CHART.padLeft + gi * groupW + groupW * 0.1 + mi * barW,
      y: CHART.padTop + (plotH - height),
      width: barW,
      height,
      meanScore: cell.mean_score,
      meanHi: cell.mean_hi,
    });
  }
  return bars;
}

export function renderChart(report: EvalReport): string {
  if (report.cells.length === 0) {
    return `<p class="empty" data-testid="empty-report">No evaluation records yet.</p>`;
  }
  const bars = layoutBars(report.cells);
  const rects = bars
    .map(
      (b) => `<rect data-cell="${b.module}/${b.method}" x="${b.x.toFixed(1)}" y="${b.y.toFixed(1)}"
        width="${b.width.toFixed(1)}" height="${b.height.toFixed(1)}"
        fill="${METHOD_COLORS[b.method] ?? "#999"}"><title>${b.module}/${b.method}: ${b.meanScore}</title></rect>`,
    )
    .join("\n");
  const hiMarkers = bars
    .map((b) => {
      const cy = CHART.height - CHART.padBottom - Math.min(b.meanHi, 5) * 20;
      return `<circle data-hi="${b.module}/${b.method}" cx="${(b.x + b.width / 2).toFixed(1)}"
        cy="${cy.toFixed(1)}" r="3" fill="black"><title>mean HI ${b.meanHi}</title></circle>`;
    })
    .join("\n");
  const groupLabels = MODULES.map((module, i) => {
    const plotW = CHART.width - CHART.padLeft - 10;
    const x = CHART.padLeft + (i + 0.5) * (plotW / MODULES.length);
    return `<text x="${x.toFixed(1)}" y="${CHART.height - 12}" text-anchor="middle" font-size="12">${module}</text>`;
  }).join("\n");
  const legend = METHODS.map(
    (method) =>
      `<li><span class="swatch" style="background:${METHOD_COLORS[method]}"></span>${method}</li>`,
  ).join("");
  const footer = [
    report.completion_rate !== null ? `completion ${report.completion_rate}` : "",
    report.hlp_accuracy !== null ? `HLP accuracy ${report.hlp_accuracy}` : "",
  ].filter(Boolean).join(" · ");
  return `<svg viewBox="0 0 ${CHART.width} ${CHART.height}" class="eval-chart" data-testid="eval-chart">
    <line x1="${CHART.padLeft}" y1="${CHART.padTop}" x2="${CHART.padLeft}" y2="${CHART.height - CHART.padBottom}" stroke="#444"/>
    <line x1="${CHART.padLeft}" y1="${CHART.height - CHART.padBottom}" x2="${CHART.width - 10}" y2="${CHART.height - CHART.padBottom}" stroke="#444"/>
    ${rects}
    ${hiMarkers}
    ${groupLabels}
  </svg>
  <ul class="legend chart-legend">${legend}</ul>
  ${footer ? `<p class="report-footer">${escapeHtml(footer)}</p>` : ""}`;
}

export function renderScoreForm(): string {
  const moduleOptions = MODULES.map((m) => `<option>${m}</option>`).join("");
  const methodOptions = METHODS.map((m) => `<option>${m}</option>`).join("");
  const scoreOptions = [1.0, 0.8, 0.6, 0.4, 0.2, 0.0]
    .map((s) => `<option value="${s}">${s.toFixed(1)}</option>`)
    .join("");
  return `<form data-form="human-score" class="score-form">
    <h4>Submit expert score</h4>
    <label>Module <select name="module">${moduleOptions}</select></label>
    <label>Method <select name="method">${methodOptions}</select></label>
    <label>Score <select name="score">${scoreOptions}</select></label>
    <label>HI <input name="hi" type="number" min="0" value="0"></label>
    <label>Task <input name="task_id" placeholder="case-1"></label>
    <button type="submit">Record</button>
  </form>`;
}

export function renderDashboard(report: EvalReport): string {
  return `<section class="eval-dashboard">
    <h2>Evaluation</h2>
    ${renderChart(report)}
    ${renderScoreForm()}
  </section>`;
}
