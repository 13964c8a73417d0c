import { describe, expect, it } from "vitest";

import type { ApiEvent } from "../src/api.js";
import {
  applyEvent,
  fromSnapshot,
  initialState,
  lightBrightness,
  setConnection,
} from "../src/store.js";

let seq = 0;
function ev(kind: string, payload: Record<string, unknown>): ApiEvent {
  return { seq: ++seq, kind, payload, ts: "2025-01-01T00:00:00+00:00" };
}

describe("reducer", () => {
  it("walks phases from events", () => {
    let s = initialState();
    expect(s.phase).toBe("idle");
    s = applyEvent(s, ev("PhaseChanged", { phase: "request" }));
    expect(s.phase).toBe("request");
    s = applyEvent(s, ev("PhaseChanged", { phase: "conversation" }));
    expect(s.phase).toBe("conversation");
    s = applyEvent(s, ev("PhaseChanged", { phase: "transformation" }));
    s = applyEvent(s, ev("PhaseChanged", { phase: "idle" }));
    expect(s.phase).toBe("idle");
  });

  it("binds the object and appends transcript entries", () => {
    let s = initialState();
    s = applyEvent(s, ev("ObjectBound", { object_id: "obj-1", name: "Mug", description: "a mug" }));
    expect(s.object?.name).toBe("Mug");
    s = applyEvent(s, ev("TranscriptAppended", { speaker: "human", text: "hello", silence: false, ts: "t" }));
    s = applyEvent(s, ev("TranscriptAppended", { speaker: "object", text: null, silence: true, ts: "t" }));
    expect(s.transcript).toHaveLength(2);
    expect(s.transcript[1].silence).toBe(true);
  });

  it("clears session data when a new session starts", () => {
    let s = initialState();
    s = applyEvent(s, ev("ObjectBound", { object_id: "obj-1", name: "Mug", description: "a mug" }));
    s = applyEvent(s, ev("TranscriptAppended", { speaker: "human", text: "hi", silence: false, ts: "t" }));
    s = applyEvent(s, ev("InnerThoughts", { text: "hm", intent: 0.5 }));
    s = applyEvent(s, ev("PhaseChanged", { phase: "request" }));
    expect(s.object).toBeNull();
    expect(s.transcript).toHaveLength(0);
    expect(s.inner).toHaveLength(0);
  });

  it("collects inner thoughts and light samples", () => {
    let s = initialState();
    s = applyEvent(s, ev("InnerThoughts", { text: "curious", intent: 0.9 }));
    expect(s.inner[0]).toEqual({ text: "curious", intent: 0.9 });
    s = applyEvent(s, ev("LightSample", { mode: "breathing", b_min: 0.15, b_max: 0.9, period_s: 4 }));
    expect(s.light.mode).toBe("breathing");
  });

  it("ignores unknown event kinds", () => {
    const s = initialState();
    expect(applyEvent(s, ev("SomethingNew", {}))).toEqual(s);
  });

  it("does not mutate previous states", () => {
    const s0 = initialState();
    const s1 = applyEvent(s0, ev("TranscriptAppended", { speaker: "human", text: "x", silence: false, ts: "t" }));
    expect(s0.transcript).toHaveLength(0);
    expect(s1.transcript).toHaveLength(1);
  });

  it("builds from a daemon snapshot", () => {
    const s = fromSnapshot({
      phase: "conversation",
      light: { mode: "breathing", b_min: 0.1, b_max: 0.8, period_s: 2 },
      object: { object_id: "o", name: "N", description: "d", traits: [] },
      transcript: [{ speaker: "human", text: "hey", silence: false, ts: "t" }],
    });
    expect(s.phase).toBe("conversation");
    expect(s.object?.object_id).toBe("o");
    expect(s.transcript).toHaveLength(1);
  });

  it("tracks connection state", () => {
    const s = setConnection(initialState(), "open");
    expect(s.connection).toBe("open");
  });
});

describe("lightBrightness", () => {
  const pattern = { mode: "breathing", b_min: 0.15, b_max: 0.9, period_s: 4 };

  it("is b_min at the start of the cycle and b_max at the midpoint", () => {
    expect(lightBrightness(pattern, 0)).toBeCloseTo(0.15, 6);
    expect(lightBrightness(pattern, 2)).toBeCloseTo(0.9, 6);
    expect(lightBrightness(pattern, 4)).toBeCloseTo(0.15, 6);
  });

  it("stays within bounds over the cycle", () => {
    for (let t = 0; t <= 8; t += 0.1) {
      const b = lightBrightness(pattern, t);
      expect(b).toBeGreaterThanOrEqual(0.15 - 1e-9);
      expect(b).toBeLessThanOrEqual(0.9 + 1e-9);
    }
  });

  it("handles steady and off modes", () => {
    expect(lightBrightness({ ...pattern, mode: "steady_bright" }, 1.3)).toBe(0.9);
    expect(lightBrightness({ ...pattern, mode: "off" }, 1.3)).toBe(0);
  });
});
