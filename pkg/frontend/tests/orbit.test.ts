import { describe, expect, it } from "vitest";

import { DEFAULT_ORBIT, applyDrag, applyWheel, orbitPosition, toCameraMessage } from "../src/orbit.js";

describe("orbit camera", () => {
  it("a 180-degree horizontal drag advances azimuth by pi", () => {
    const radiansPerPixel = 0.01;
    const pixels = Math.PI / radiansPerPixel;
    const next = applyDrag(DEFAULT_ORBIT, pixels, 0, radiansPerPixel);
    expect(next.azimuth - DEFAULT_ORBIT.azimuth).toBeCloseTo(Math.PI, 10);
    const message = toCameraMessage(next);
    expect(message.type).toBe("camera");
  });

  it("keeps the radius fixed under drags", () => {
    let state = DEFAULT_ORBIT;
    for (let i = 0; i < 50; i++) state = applyDrag(state, 13, -7);
    const p = orbitPosition(state);
    const r = Math.hypot(p[0] - 0.5, p[1] - 0.5, p[2] - 0.5);
    expect(r).toBeCloseTo(DEFAULT_ORBIT.radius, 10);
  });

  it("clamps elevation away from the poles", () => {
    const state = applyDrag(DEFAULT_ORBIT, 0, 1e6);
    expect(state.elevation).toBeLessThan(Math.PI / 2);
    expect(orbitPosition(state)[1]).toBeGreaterThan(0.5);
  });

  it("wheel zooms multiplicatively with a floor", () => {
    const closer = applyWheel(DEFAULT_ORBIT, -120);
    expect(closer.radius).toBeLessThan(DEFAULT_ORBIT.radius);
    let state = DEFAULT_ORBIT;
    for (let i = 0; i < 200; i++) state = applyWheel(state, -120);
    expect(state.radius).toBeGreaterThan(0);
  });

  it("camera message mirrors the orbit state", () => {
    const message = toCameraMessage({ azimuth: 0, elevation: 0, radius: 2, target: [0.5, 0.5, 0.5] });
    expect(message.position[0]).toBeCloseTo(2.5, 12);
    expect(message.position[1]).toBeCloseTo(0.5, 12);
    expect(message.position[2]).toBeCloseTo(0.5, 12);
    expect(message.up).toEqual([0, 1, 0]);
  });
});
