import { describe, expect, it, vi } from "vitest";
import type { ServiceClient } from "../src/api.js";
import { subscribe } from "../src/events.js";
import type { SessionEvent } from "../src/types.js";

function fakeClient(batches: SessionEvent[][]): ServiceClient {
  let call = 0;
  const seen: number[] = [];
  const client = {
    events: async (_id: string, after: number) => {
      seen.push(after);
      return batches[Math.min(call++, batches.length - 1)] ?? [];
    },
  } as unknown as ServiceClient;
  return Object.assign(client, { seenAfters: seen });
}

const event = (seq: number): SessionEvent => ({ seq, kind: "step_started", payload: {} });

describe("subscription", () => {
  it("advances its cursor past delivered events", async () => {
    vi.useFakeTimers();
    const client = fakeClient([[event(1), event(2)], [event(3)], []]);
    const delivered: number[] = [];
    const sub = subscribe(client, "s1", 0, (events) => {
      delivered.push(...events.map((e) => e.seq));
    }, () => {}, 10);

    await vi.advanceTimersByTimeAsync(50);
    sub.stop();
    vi.useRealTimers();

    expect(delivered).toEqual([1, 2, 3]);
    const afters = (client as unknown as { seenAfters: number[] }).seenAfters;
    expect(afters.slice(0, 3)).toEqual([0, 2, 3]); // resume from the last seq
  });

  it("reports errors and keeps polling", async () => {
    vi.useFakeTimers();
    let calls = 0;
    const client = {
      events: async (_id: string, after: number) => {
        calls++;
        if (calls === 1) throw new Error("connection lost");
        return [event(1)].filter((e) => e.seq > after);
      },
    } as unknown as ServiceClient;
    const errors: unknown[] = [];
    const delivered: number[] = [];
    const sub = subscribe(client, "s1", 0,
      (events) => delivered.push(...events.map((e) => e.seq)),
      (error) => errors.push(error), 10);

    await vi.advanceTimersByTimeAsync(50);
    sub.stop();
    vi.useRealTimers();

    expect(errors).toHaveLength(1);
    expect(delivered).toEqual([1]); // recovered after the failure
  });

  it("stops cleanly and never delivers after stop", async () => {
    vi.useFakeTimers();
    const client = fakeClient([[event(1)]]);
    const delivered: number[] = [];
    const sub = subscribe(client, "s1", 0,
      (events) => delivered.push(...events.map((e) => e.seq)), () => {}, 10);
    sub.stop();
    await vi.advanceTimersByTimeAsync(100);
    vi.useRealTimers();
    expect(delivered).toEqual([]);
  });
});
