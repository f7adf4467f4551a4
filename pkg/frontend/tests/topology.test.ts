import { describe, expect, it } from "vitest";
import {
  panViewBox,
  renderComparison,
  renderLegend,
  renderTopologyPanel,
  zoomViewBox,
} from "../src/topology.js";
import { finalStage, topologySvg } from "./fixtures.js";

describe("legend", () => {
  it("names both layer styles and all four congestion classes", () => {
    const html = renderLegend();
    expect(html).toContain("optical fiber (dashed)");
    expect(html).toContain("IP link (solid)");
    expect(html).toContain("stroke-dasharray");
    for (const color of ["green", "yellow", "orange", "red"]) {
      expect(html).toContain(`background:${color}`);
    }
  });
});

describe("viewBox math", () => {
  it("zooming in shrinks the window around the center", () => {
    expect(zoomViewBox("0 0 800 600", 2)).toBe("200 150 400 300");
  });

  it("zoom out then in restores the original box", () => {
    const once = zoomViewBox("0 0 800 600", 0.5);
    expect(zoomViewBox(once, 2)).toBe("0 0 800 600");
  });

  it("panning shifts by a fraction of the window", () => {
    expect(panViewBox("0 0 800 600", 0.5, 0)).toBe("400 0 800 600");
  });

  it("leaves malformed boxes untouched", () => {
    expect(zoomViewBox("garbage", 2)).toBe("garbage");
  });
});

describe("topology panel", () => {
  it("embeds the server-rendered svg untouched", () => {
    const html = renderTopologyPanel(topologySvg, null);
    expect(html).toContain(topologySvg);
    expect(html).toContain('data-zoom="in"');
  });

  it("shows a retry placeholder when no render exists yet", () => {
    const html = renderTopologyPanel(null, null);
    expect(html).toContain('data-testid="placeholder"');
    expect(html).toContain("retry-artifact");
  });

  it("always offers both what-if forms", () => {
    const html = renderTopologyPanel(topologySvg, null);
    expect(html).toContain('data-form="add-capacity"');
    expect(html).toContain('data-form="add-fiber"');
  });

  it("shows the cost pair and delta after a what-if", () => {
    const comparison = finalStage.snapshot.whatifs[0];
    const html = renderComparison(comparison);
    expect(html).toContain("plan cost before");
    expect(html).toContain("plan cost after");
    expect(html).toContain(`${comparison.old_cost.toFixed(1)}`);
    expect(html).toContain("max utilization 75%");
    expect(html).toContain("50%");
  });
});
