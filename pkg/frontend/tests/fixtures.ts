// Wire fixtures captured from the real session service running the
// canonical three-step capacity case in checkpoint mode (plus one
// add-capacity what-if). Regenerate with the snippet in the README if the
// service wire format changes.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { SessionEvent, Snapshot } from "../src/types.js";

export interface Stage {
  label: string;
  snapshot: Snapshot;
  events: SessionEvent[];
}

interface FixtureFile {
  stages: Stage[];
  svg: string;
}

const here = dirname(fileURLToPath(import.meta.url));
const raw = readFileSync(join(here, "fixtures", "session_stages.json"), "utf-8");
const doc = JSON.parse(raw) as FixtureFile;

export const stages: Stage[] = doc.stages;
export const finalStage: Stage = doc.stages[doc.stages.length - 1];
export const topologySvg: string = doc.svg;

export function stage(label: string): Stage {
  const found = doc.stages.find((s) => s.label === label);
  if (!found) throw new Error(`no fixture stage ${label}`);
  return found;
}
