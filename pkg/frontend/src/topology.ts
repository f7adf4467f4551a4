// Topology panel: the server-rendered SVG shown as-is (single source of
// rendering truth), a layer/congestion legend, pan-zoom on the viewBox,
// what-if forms, and the old/new cost comparison after a what-if runs.

import { escapeHtml, money, percent, signed } from "./format.js";
import type { Comparison } from "./types.js";

export const CONGESTION_LEGEND: ReadonlyArray<readonly [string, string]> = [
  ["green", "utilization below 0.5"],
  ["yellow", "0.5 to 0.7"],
  ["orange", "0.7 to 0.8"],
  ["red", "0.8 and above (cap violated)"],
];

export function renderLegend(): string {
  const colors = CONGESTION_LEGEND.map(
    ([color, label]) =>
      `<li><span class="swatch" style="background:${color}"></span> ${escapeHtml(label)}</li>`,
  ).join("");
  return `<ul class="legend" data-testid="legend">
    <li><svg width="34" height="10"><line x1="0" y1="5" x2="34" y2="5" stroke="black" stroke-width="2" stroke-dasharray="6,4"/></svg> optical fiber (dashed)</li>
    <li><svg width="34" height="10"><line x1="0" y1="5" x2="34" y2="5" stroke="black" stroke-width="2"/></svg> IP link (solid)</li>
    ${colors}
  </ul>`;
}

/** viewBox string -> zoomed viewBox string (pure, so it is unit-testable). */
export function zoomViewBox(viewBox: string, factor: number): string {
  const [x, y, w, h] = viewBox.split(/\s+/).map(Number);
  if ([x, y, w, h].some(Number.isNaN) || factor <= 0) return viewBox;
  const nw = w / factor;
  const nh = h / factor;
  return `${x + (w - nw) / 2} ${y + (h - nh) / 2} ${nw} ${nh}`;
}

export function panViewBox(viewBox: string, dx: number, dy: number): string {
  const [x, y, w, h] = viewBox.split(/\s+/).map(Number);
  if ([x, y, w, h].some(Number.isNaN)) return viewBox;
  return `${x + dx * w} ${y + dy * h} ${w} ${h}`;
}

export function renderWhatIfForms(): string {
  return `<div class="whatif-forms">
    <form data-form="add-capacity">
      <h4>Add capacity</h4>
      <label>IP link <input name="ip_link_id" required placeholder="L3"></label>
      <label>Extra modules <input name="extra_modules" type="number" min="1" value="1" required></label>
      <button type="submit">Run what-if</button>
    </form>
    <form data-form="add-fiber">
      <h4>Add fiber</h4>
      <label>From <input name="a" required placeholder="A"></label>
      <label>To <input name="b" required placeholder="C"></label>
      <label>Length (km) <input name="length_km" type="number" min="1" step="any" value="100" required></label>
      <button type="submit">Run what-if</button>
    </form>
  </div>`;
}

export function renderComparison(comparison: Comparison | null): string {
  if (!comparison) return "";
  const action = JSON.stringify(comparison.action);
  return `<aside class="comparison" data-testid="comparison">
    <h4>What-if result</h4>
    <p class="action"><code>${escapeHtml(action)}</code></p>
    <div class="cost-pair">
      <div><span class="label">plan cost before</span><span class="value">${money(comparison.old_cost)}</span></div>
      <div><span class="label">plan cost after</span><span class="value">${money(comparison.new_cost)}</span></div>
      <div><span class="label">delta</span><span class="value delta">${signed(comparison.cost_delta)}</span></div>
      <div><span class="label">action capex</span><span class="value">${money(comparison.action_capex)}</span></div>
    </div>
    <p>max utilization ${percent(comparison.old_max_utilization)} → ${percent(comparison.new_max_utilization)}</p>
  </aside>`;
}

export function renderTopologyPanel(svgContent: string | null,
                                    comparison: Comparison | null): string {
  const viewer = svgContent
    ? `<div class="svg-holder" data-testid="svg-holder">${svgContent}</div>
       <div class="zoom-controls">
         <button data-zoom="in" title="zoom in">+</button>
         <button data-zoom="out" title="zoom out">−</button>
         <button data-zoom="reset" title="reset">↺</button>
       </div>`
    : `<p class="placeholder" data-testid="placeholder">No topology render yet.
       <button data-action="retry-artifact">Retry</button></p>`;
  return `<section class="topology-panel">
    <h2>Topology</h2>
    ${viewer}
    ${renderLegend()}
    ${renderWhatIfForms()}
    ${renderComparison(comparison)}
  </section>`;
}
