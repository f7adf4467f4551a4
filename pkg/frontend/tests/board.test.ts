import { describe, expect, it } from "vitest";
import { renderBoard, renderHiBadge, renderTranscript } from "../src/board.js";
import { fromSnapshot } from "../src/state.js";
import { finalStage, stage } from "./fixtures.js";

describe("plan board", () => {
  it("renders service statuses verbatim, never invented ones", () => {
    const view = fromSnapshot(stage("approved_2").snapshot);
    const html = renderBoard(view);
    for (const step of view.plan!.steps) {
      expect(html).toContain(`data-testid="status-${step.id}">${step.status}<`);
    }
  });

  it("offers approve controls only for pending steps in checkpoint mode", () => {
    const planned = fromSnapshot(stage("planned").snapshot);
    const html = renderBoard(planned);
    expect(html.match(/data-action="approve"/g)?.length).toBe(3);

    const partiallyDone = fromSnapshot(stage("approved_1").snapshot);
    const html2 = renderBoard(partiallyDone);
    expect(html2.match(/data-action="approve"/g)?.length).toBe(2); // step 1 is done
  });

  it("reaches the all-done state with an outcome panel", () => {
    const view = fromSnapshot(stage("approved_3").snapshot);
    const html = renderBoard(view);
    expect(html).toContain("all-done");
    expect(html).toContain('data-testid="outcome"');
    expect(html).toContain("Session complete");
    expect(html).toContain("total cost 2.0");
  });

  it("shows the HI badge with the service count", () => {
    expect(renderHiBadge(0)).toContain("HI 0");
    const view = fromSnapshot(finalStage.snapshot);
    expect(renderBoard(view)).toContain("HI 1");
  });

  it("escapes HTML in descriptions", () => {
    const view = fromSnapshot(stage("planned").snapshot);
    view.plan!.steps[0].description = "<script>alert(1)</script>";
    expect(renderBoard(view)).not.toContain("<script>alert(1)</script>");
  });

  it("renders every transcript entry with its role", () => {
    const view = fromSnapshot(finalStage.snapshot);
    const html = renderTranscript(view);
    expect(html).toContain(`Transcript (${view.transcript.length})`);
    for (const role of ["operator", "analyzer", "planner", "calculator", "executor"]) {
      expect(html).toContain(`<b>${role}</b>`);
    }
  });
});
