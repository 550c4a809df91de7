/** Trace buffer invariants: time-ordered, windowed, hard-capped point count. */

import { describe, expect, it } from "vitest";

import { MAX_POINTS, TraceBuffer, WINDOW_SEC } from "../src/traces.js";

describe("TraceBuffer", () => {
  it("holds at most 500 points under standard 50 Hz input", () => {
    const buf = new TraceBuffer();
    for (let i = 0; i <= 500; i++) {
      buf.push(i * 0.02, Math.sin(i));   // 50 Hz for 10 s
    }
    expect(buf.length).toBeLessThanOrEqual(MAX_POINTS);
  });

  it("slides a 10 s window over a long stream", () => {
    const buf = new TraceBuffer();
    for (let i = 0; i < 3000; i++) {
      buf.push(i * 0.02, i);   // 60 s of 50 Hz samples
    }
    expect(buf.length).toBeLessThanOrEqual(MAX_POINTS);
    const first = buf.points[0];
    const last = buf.points[buf.points.length - 1];
    expect(last.t - first.t).toBeLessThanOrEqual(WINDOW_SEC);
    expect(last.t).toBeCloseTo(2999 * 0.02, 12);
  });

  it("caps the buffer even for input far above the snapshot rate", () => {
    const buf = new TraceBuffer();
    for (let i = 0; i < 5000; i++) {
      buf.push(i * 0.001, i);   // 1 kHz: window alone would keep 5000 points
    }
    expect(buf.length).toBe(MAX_POINTS);
  });

  it("stays time-ordered by ignoring out-of-order samples", () => {
    const buf = new TraceBuffer();
    buf.push(5.0, 1);
    buf.push(4.0, 2);   // ignored
    buf.push(5.0, 3);   // ignored (duplicate time)
    buf.push(5.1, 4);
    expect(buf.points.map((p) => p.t)).toEqual([5.0, 5.1]);
    for (let i = 1; i < buf.points.length; i++) {
      expect(buf.points[i].t).toBeGreaterThan(buf.points[i - 1].t);
    }
  });

  it("clear empties the buffer", () => {
    const buf = new TraceBuffer();
    buf.push(1, 1);
    buf.clear();
    expect(buf.length).toBe(0);
  });
});
