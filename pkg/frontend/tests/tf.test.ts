import { describe, expect, it } from "vitest";

import { TfEditor } from "../src/tf.js";

describe("transfer function editor", () => {
  it("deleting all interior points leaves a two-point ramp", () => {
    const tf = new TfEditor();
    tf.addPoint(0.3, 0.5);
    tf.addPoint(0.6, 0.9);
    tf.deleteInterior();
    const message = tf.toMessage();
    expect(message.points).toHaveLength(2);
    expect(message.points[0].x).toBe(0);
    expect(message.points[1].x).toBe(1);
  });

  it("dragging a point past its neighbor clamps at the neighbor", () => {
    const tf = new TfEditor();
    const a = tf.addPoint(0.3, 0.5);
    const b = tf.addPoint(0.6, 0.7);
    tf.movePoint(a, 0.95, 0.5); // tries to cross the 0.6 neighbor
    expect(tf.points[a].x).toBeLessThan(tf.points[b].x);
    expect(tf.points[a].x).toBeCloseTo(tf.points[b].x, 3);
    // x stays strictly increasing after arbitrary moves
    const xs = tf.points.map((p) => p.x);
    expect([...xs].sort((p, q) => p - q)).toEqual(xs);
    expect(new Set(xs).size).toBe(xs.length);
  });

  it("endpoints keep their x but accept opacity edits", () => {
    const tf = new TfEditor();
    tf.movePoint(0, 0.4, 0.25);
    tf.deletePoint(0);
    expect(tf.points[0].x).toBe(0);
    expect(tf.points[0].a).toBe(0.25);
  });

  it("all-transparent edit produces a zero-opacity message", () => {
    const tf = new TfEditor();
    tf.addPoint(0.5, 0.9);
    tf.setAllOpacity(0);
    const message = tf.toMessage();
    expect(message.points.every((p) => p.a === 0)).toBe(true);
    expect(message.type).toBe("tf");
  });

  it("interpolates opacity piecewise linearly", () => {
    const tf = new TfEditor([
      { x: 0, a: 0 },
      { x: 1, a: 1 },
    ]);
    expect(tf.opacityAt(0.25)).toBeCloseTo(0.25, 12);
    tf.addPoint(0.5, 1.0);
    expect(tf.opacityAt(0.25)).toBeCloseTo(0.5, 12);
  });

  it("colormap fills rgb for every point", () => {
    const tf = new TfEditor(undefined, "viridis_like");
    for (const p of tf.toMessage().points) {
      expect(p.rgb).toHaveLength(3);
      for (const c of p.rgb) {
        expect(c).toBeGreaterThanOrEqual(0);
        expect(c).toBeLessThanOrEqual(1);
      }
    }
  });
});
