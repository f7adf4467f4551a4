// App wiring: hash routes (#/new, #/session/<id>, #/eval), event
// subscription, and delegated DOM handlers. Rendering itself lives in the
// pure modules (board/topology/dashboard) so it stays testable.

import { ServiceClient } from "./api.js";
import { renderBoard, renderTranscript } from "./board.js";
import { renderDashboard } from "./dashboard.js";
import { subscribe, type Subscription } from "./events.js";
import { applyEvents, fromSnapshot, type SessionView } from "./state.js";
import { panViewBox, renderTopologyPanel, zoomViewBox } from "./topology.js";
import type { Comparison, WhatIfAction } from "./types.js";

const client = new ServiceClient("");
const app = document.getElementById("app")!;

let view: SessionView | null = null;
let svgContent: string | null = null;
let subscription: Subscription | null = null;
let initialViewBox: string | null = null;

function latestComparison(): Comparison | null {
  if (!view || view.whatifs.length === 0) return null;
  return view.whatifs[view.whatifs.length - 1];
}

function renderSession(): void {
  if (!view) return;
  app.innerHTML = `
    <div class="columns">
      <div class="col board-col">${renderBoard(view)}${renderTranscript(view)}</div>
      <div class="col viz-col">${renderTopologyPanel(svgContent, latestComparison())}</div>
    </div>`;
  const svg = app.querySelector<SVGSVGElement>(".svg-holder svg");
  if (svg && !svg.getAttribute("viewBox")) {
    svg.setAttribute("viewBox", `0 0 ${svg.getAttribute("width")} ${svg.getAttribute("height")}`);
  }
  if (svg) initialViewBox = initialViewBox ?? svg.getAttribute("viewBox");
}

async function refreshArtifacts(): Promise<void> {
  if (!view) return;
  if (view.artifacts.includes("whatif_topology.svg")) {
    svgContent = await client.artifact(view.id, "whatif_topology.svg").catch(() => svgContent);
  } else if (view.artifacts.includes("topology.svg")) {
    svgContent = await client.artifact(view.id, "topology.svg").catch(() => svgContent);
  }
}

async function reconcile(sessionId: string): Promise<void> {
  const snapshot = await client.getSession(sessionId);
  const lastSeq = view?.id === sessionId ? view.lastSeq : 0;
  view = fromSnapshot(snapshot, lastSeq);
  await refreshArtifacts();
  renderSession();
}

async function openSession(sessionId: string): Promise<void> {
  subscription?.stop();
  svgContent = null;
  initialViewBox = null;
  await reconcile(sessionId);
  subscription = subscribe(
    client,
    sessionId,
    view?.lastSeq ?? 0,
    async (events) => {
      if (!view) return;
      view = applyEvents(view, events);
      await refreshArtifacts();
      renderSession();
    },
    () => {
      // connection hiccup: converge through a fresh snapshot
      void reconcile(sessionId);
    },
  );
}

function renderNewSessionForm(): void {
  app.innerHTML = `
    <form data-form="create-session" class="create-form">
      <h2>New planning session</h2>
      <label>Task <textarea name="task_text" required rows="2">Plan the IP network capacity for the attached traffic matrix.</textarea></label>
      <label>State <input name="state_text" value="three-site metro ring"></label>
      <label>Constraints <input name="constraint_text" value="max_load <= 0.8 * total_capacity between 9 and 17"></label>
      <label>Attachments (comma separated) <input name="attachments" value="triangle.json,traffic.csv"></label>
      <label>Mode <select name="mode"><option>checkpoint</option><option>auto</option></select></label>
      <button type="submit">Create session</button>
    </form>`;
}

async function renderEval(): Promise<void> {
  const report = await client.evalReport();
  app.innerHTML = renderDashboard(report);
}

async function route(): Promise<void> {
  subscription?.stop();
  const hash = window.location.hash || "#/new";
  if (hash.startsWith("#/session/")) {
    await openSession(hash.slice("#/session/".length));
  } else if (hash === "#/eval") {
    await renderEval();
  } else {
    renderNewSessionForm();
  }
}

function formValues(form: HTMLFormElement): Record<string, string> {
  const data = new FormData(form);
  const values: Record<string, string> = {};
  data.forEach((value, key) => {
    values[key] = String(value);
  });
  return values;
}

app.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  const kind = form.dataset["form"];
  if (!kind) return;
  event.preventDefault();
  void (async () => {
    try {
      if (kind === "create-session") {
        const values = formValues(form);
        const { id } = await client.createSession({
          task_text: values["task_text"],
          state_text: values["state_text"],
          constraint_text: values["constraint_text"],
          attachments: values["attachments"].split(",").map((s) => s.trim()).filter(Boolean),
          mode: values["mode"] === "auto" ? "auto" : "checkpoint",
        });
        window.location.hash = `#/session/${id}`;
        await (values["mode"] === "auto" ? client.runAuto(id) : client.runCheckpoint(id));
      } else if (kind === "add-capacity" && view) {
        const values = formValues(form);
        const action: WhatIfAction = {
          type: "add_capacity",
          ip_link_id: values["ip_link_id"],
          extra_modules: Number(values["extra_modules"]),
        };
        await client.whatIf(view.id, action);
      } else if (kind === "add-fiber" && view) {
        const values = formValues(form);
        await client.whatIf(view.id, {
          type: "add_fiber", a: values["a"], b: values["b"],
          length_km: Number(values["length_km"]),
        });
      } else if (kind === "human-score") {
        const values = formValues(form);
        await client.postEvalRecord({
          module: values["module"], method: values["method"],
          score: Number(values["score"]), hi: Number(values["hi"] || "0"),
          task_id: values["task_id"],
        });
        await renderEval();
      }
    } catch (error) {
      alert(String(error));
    }
  })();
});

app.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("button");
  if (!target || !view) return;
  const svg = app.querySelector<SVGSVGElement>(".svg-holder svg");
  if (target.dataset["zoom"] && svg) {
    const current = svg.getAttribute("viewBox") ?? "";
    if (target.dataset["zoom"] === "in") svg.setAttribute("viewBox", zoomViewBox(current, 1.25));
    if (target.dataset["zoom"] === "out") svg.setAttribute("viewBox", zoomViewBox(current, 0.8));
    if (target.dataset["zoom"] === "reset" && initialViewBox) {
      svg.setAttribute("viewBox", initialViewBox);
    }
    return;
  }
  if (target.dataset["action"] === "retry-artifact") {
    void reconcile(view.id);
    return;
  }
  const stepId = target.dataset["step"];
  if (!stepId) return;
  void (async () => {
    try {
      if (target.dataset["action"] === "approve") {
        await client.approveStep(view!.id, Number(stepId));
      } else if (target.dataset["action"] === "edit") {
        const raw = window.prompt("Step field changes as JSON (counts as one HI):",
                                  '{"args": {"u_max": 0.7}}');
        if (!raw) return;
        await client.approveStep(view!.id, Number(stepId), JSON.parse(raw));
      }
      await reconcile(view!.id);
    } catch (error) {
      alert(String(error));
    }
  })();
});

// drag-to-pan on the topology SVG
let dragging: { x: number; y: number } | null = null;
app.addEventListener("mousedown", (event) => {
  if ((event.target as HTMLElement).closest(".svg-holder")) {
    dragging = { x: event.clientX, y: event.clientY };
  }
});
app.addEventListener("mousemove", (event) => {
  if (!dragging) return;
  const svg = app.querySelector<SVGSVGElement>(".svg-holder svg");
  if (!svg) return;
  const dx = (dragging.x - event.clientX) / svg.clientWidth;
  const dy = (dragging.y - event.clientY) / svg.clientHeight;
  svg.setAttribute("viewBox", panViewBox(svg.getAttribute("viewBox") ?? "", dx, dy));
  dragging = { x: event.clientX, y: event.clientY };
});
app.addEventListener("mouseup", () => {
  dragging = null;
});

window.addEventListener("hashchange", () => void route());
void route();
