/**
 * Rolling stats series behind the fps / miss-rate / occupancy charts.
 */

import type { StatsPayload } from "./protocol.js";

export class RollingSeries {
  values: number[] = [];

  constructor(public windowSize = 240) {}

  push(value: number): void {
    this.values.push(value);
    if (this.values.length > this.windowSize) {
      this.values.splice(0, this.values.length - this.windowSize);
    }
  }

  get length(): number {
    return this.values.length;
  }

  latest(): number | undefined {
    return this.values[this.values.length - 1];
  }

  isNonDecreasing(tolerance = 1e-9): boolean {
    for (let i = 1; i < this.values.length; i++) {
      if (this.values[i] < this.values[i - 1] - tolerance) return false;
    }
    return true;
  }
}

export class Dashboard {
  fps: RollingSeries;
  trueMissRate: RollingSeries;
  occupancy: RollingSeries;
  bricksLoadedTotal = 0;
  requestsInflight = 0;
  lastFrame = -1;

  constructor(windowSize = 240) {
    this.fps = new RollingSeries(windowSize);
    this.trueMissRate = new RollingSeries(windowSize);
    this.occupancy = new RollingSeries(windowSize);
  }

  push(stats: StatsPayload): void {
    this.fps.push(stats.fps);
    this.trueMissRate.push(stats.true_miss_rate);
    this.occupancy.push(stats.cache_occupancy);
    this.bricksLoadedTotal = stats.bricks_loaded_total;
    this.requestsInflight = stats.requests_inflight;
    this.lastFrame = stats.frame;
  }
}
