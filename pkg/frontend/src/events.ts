// Event subscription: long-poll loop with resume-after-cursor semantics.
// On any gap or failure the caller reconciles against a fresh snapshot, so
// the view never drifts from service truth (and never duplicates events,
// because the cursor only moves forward).

import type { ServiceClient } from "./api.js";
import type { SessionEvent } from "./types.js";

export interface Subscription {
  stop(): void;
}

export function subscribe(
  client: ServiceClient,
  sessionId: string,
  fromSeq: number,
  onEvents: (events: SessionEvent[]) => void,
  onError: (error: unknown) => void,
  intervalMs = 500,
): Subscription {
  let cursor = fromSeq;
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | null = null;

  const tick = async () => {
    if (stopped) return;
    try {
      const batch = await client.events(sessionId, cursor, 2);
      if (stopped) return;
      if (batch.length > 0) {
        cursor = batch[batch.length - 1].seq;
        onEvents(batch);
      }
    } catch (error) {
      if (!stopped) onError(error);
    }
    if (!stopped) timer = setTimeout(tick, intervalMs);
  };

  timer = setTimeout(tick, 0);
  return {
    stop() {
      stopped = true;
      if (timer !== null) clearTimeout(timer);
    },
  };
}
