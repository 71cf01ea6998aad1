/**
 * Orbit camera: azimuth/elevation/radius around a target, matching the
 * bench harness trajectories so interactive views are comparable.
 */

export interface OrbitState {
  azimuth: number; // radians around +y
  elevation: number; // radians above the horizon
  radius: number;
  target: [number, number, number];
}

export interface CameraMessage {
  type: "camera";
  position: [number, number, number];
  target: [number, number, number];
  up: [number, number, number];
  fov: number;
}

const MAX_ELEVATION = (85 * Math.PI) / 180;
const MIN_RADIUS = 0.05;

export const DEFAULT_ORBIT: OrbitState = {
  azimuth: Math.PI / 2,
  elevation: 0.35,
  radius: 2.2,
  target: [0.5, 0.5, 0.5],
};

export function applyDrag(state: OrbitState, dxPixels: number, dyPixels: number, radiansPerPixel = 0.01): OrbitState {
  const azimuth = state.azimuth + dxPixels * radiansPerPixel;
  let elevation = state.elevation + dyPixels * radiansPerPixel;
  elevation = Math.min(MAX_ELEVATION, Math.max(-MAX_ELEVATION, elevation));
  return { ...state, azimuth, elevation };
}

export function applyWheel(state: OrbitState, deltaY: number, zoomPerNotch = 0.1): OrbitState {
  const radius = Math.max(MIN_RADIUS, state.radius * Math.exp(Math.sign(deltaY) * zoomPerNotch));
  return { ...state, radius };
}

export function orbitPosition(state: OrbitState): [number, number, number] {
  const ce = Math.cos(state.elevation);
  return [
    state.target[0] + state.radius * ce * Math.cos(state.azimuth),
    state.target[1] + state.radius * Math.sin(state.elevation),
    state.target[2] + state.radius * ce * Math.sin(state.azimuth),
  ];
}

export function toCameraMessage(state: OrbitState, fov = 45.0): CameraMessage {
  return {
    type: "camera",
    position: orbitPosition(state),
    target: [...state.target],
    up: [0, 1, 0],
    fov,
  };
}
