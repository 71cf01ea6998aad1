import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ControlCoalescer } from "../src/coalesce.js";
import { Dashboard, RollingSeries } from "../src/dashboard.js";

describe("control coalescer", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("caps a gesture burst at 30 messages per second", () => {
    const sendTimes: number[] = [];
    const sent: object[] = [];
    const coalescer = new ControlCoalescer(
      (c) => {
        sent.push(c);
        sendTimes.push(Date.now());
      },
      30,
      () => Date.now(),
    );
    for (let i = 0; i < 300; i++) {
      coalescer.push("camera", { type: "camera", azimuth: i });
      vi.advanceTimersByTime(1000 / 300);
    }
    vi.advanceTimersByTime(100);
    // consecutive sends are spaced at the 30 Hz budget or slower
    for (let i = 1; i < sendTimes.length; i++) {
      expect(sendTimes[i] - sendTimes[i - 1]).toBeGreaterThanOrEqual(1000 / 30 - 1);
    }
    expect(sent.length).toBeGreaterThan(5);
    expect(sent.length).toBeLessThan(40);
    // trailing flush delivered the newest state
    expect((sent[sent.length - 1] as any).azimuth).toBe(299);
  });

  it("keeps only the latest message per kind", () => {
    const sent: object[] = [];
    const coalescer = new ControlCoalescer((c) => sent.push(c), 30, () => Date.now());
    coalescer.push("camera", { n: 1 });
    for (let i = 2; i <= 5; i++) coalescer.push("camera", { n: i }); // within the same tick
    vi.advanceTimersByTime(200);
    expect(sent[0]).toEqual({ n: 1 });
    expect(sent[1]).toEqual({ n: 5 });
    expect(sent).toHaveLength(2);
  });

  it("no input means no control traffic", () => {
    const sent: object[] = [];
    new ControlCoalescer((c) => sent.push(c), 30, () => Date.now());
    vi.advanceTimersByTime(2000);
    expect(sent).toHaveLength(0);
  });
});

describe("dashboard", () => {
  it("rolling series length is bounded by the window", () => {
    const series = new RollingSeries(16);
    for (let i = 0; i < 100; i++) series.push(i);
    expect(series.length).toBe(16);
    expect(series.latest()).toBe(99);
    expect(series.values[0]).toBe(84);
  });

  it("tracks occupancy monotonicity", () => {
    const dash = new Dashboard(8);
    const base = { frame: 0, fps: 30, true_miss_rate: 0, fallback_rate: 0, requests_inflight: 0, bricks_loaded_total: 0 };
    for (const occ of [0, 0.1, 0.2, 0.2, 0.5]) dash.push({ ...base, cache_occupancy: occ });
    expect(dash.occupancy.isNonDecreasing()).toBe(true);
    dash.push({ ...base, cache_occupancy: 0.1 });
    expect(dash.occupancy.isNonDecreasing()).toBe(false);
  });
});
