/**
 * Browser glue: canvas display, input wiring, and the stats dashboard.
 *
 * Network consumption and painting are decoupled by a one-frame buffer:
 * the newest decoded frame wins and is painted on the next animation
 * tick; stale frames are dropped.
 */

import { ControlCoalescer } from "./coalesce.js";
import { Dashboard } from "./dashboard.js";
import { DEFAULT_ORBIT, applyDrag, applyWheel, toCameraMessage, type OrbitState } from "./orbit.js";
import { FORMAT_RGBA8, type FramePayload } from "./protocol.js";
import { TfEditor } from "./tf.js";
import { ReconnectingClient, webSocketTransport, type ConnectionStatus } from "./client.js";

export interface ViewerOptions {
  url: string;
  canvas: HTMLCanvasElement;
  onStats?: (dashboard: Dashboard) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

export class Viewer {
  orbit: OrbitState = { ...DEFAULT_ORBIT };
  tf = new TfEditor();
  dashboard = new Dashboard();
  lodScale = 1.0;
  mode: "raymarch" | "pathtrace" = "raymarch";

  private client: ReconnectingClient;
  private coalescer: ControlCoalescer;
  private pendingFrame: FramePayload | null = null;
  private painting = false;
  private dragging = false;
  private lastPointer: [number, number] | null = null;

  constructor(private options: ViewerOptions) {
    this.coalescer = new ControlCoalescer((control) => this.client.sendControl(control));
    this.client = new ReconnectingClient(() => webSocketTransport(options.url), {
      frame: (frame) => {
        this.pendingFrame = frame;
        this.schedulePaint();
      },
      stats: (stats) => {
        this.dashboard.push(stats);
        options.onStats?.(this.dashboard);
      },
      status: (status) => options.onStatus?.(status),
    });
    this.bindInput(options.canvas);
  }

  private schedulePaint(): void {
    if (this.painting) return;
    this.painting = true;
    requestAnimationFrame(() => {
      this.painting = false;
      const frame = this.pendingFrame;
      this.pendingFrame = null;
      if (frame) this.paint(frame);
    });
  }

  private paint(frame: FramePayload): void {
    const canvas = this.options.canvas;
    if (canvas.width !== frame.width || canvas.height !== frame.height) {
      canvas.width = frame.width;
      canvas.height = frame.height;
    }
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    if (frame.format === FORMAT_RGBA8) {
      const image = new ImageData(new Uint8ClampedArray(frame.pixels), frame.width, frame.height);
      ctx.putImageData(image, 0, 0);
    } else {
      const blob = new Blob([frame.pixels.slice()], { type: "image/png" });
      createImageBitmap(blob).then((bitmap) => ctx.drawImage(bitmap, 0, 0));
    }
  }

  private bindInput(canvas: HTMLCanvasElement): void {
    canvas.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      this.lastPointer = [e.clientX, e.clientY];
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener("pointerup", (e) => {
      this.dragging = false;
      this.lastPointer = null;
      canvas.releasePointerCapture(e.pointerId);
      this.coalescer.flush();
    });
    canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging || !this.lastPointer) return;
      const dx = e.clientX - this.lastPointer[0];
      const dy = e.clientY - this.lastPointer[1];
      this.lastPointer = [e.clientX, e.clientY];
      this.orbit = applyDrag(this.orbit, dx, dy);
      this.coalescer.push("camera", toCameraMessage(this.orbit));
    });
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.orbit = applyWheel(this.orbit, e.deltaY);
      this.coalescer.push("camera", toCameraMessage(this.orbit));
    });
  }

  setLodScale(value: number): void {
    this.lodScale = value;
    this.coalescer.push("lod_scale", { type: "lod_scale", value });
  }

  setMode(mode: "raymarch" | "pathtrace"): void {
    this.mode = mode;
    this.coalescer.push("mode", { type: "mode", value: mode });
  }

  commitTransferFunction(): void {
    this.coalescer.push("tf", this.tf.toMessage());
  }

  resetCache(): void {
    this.coalescer.push("reset_cache", { type: "reset_cache" });
  }

  close(): void {
    this.coalescer.dispose();
    this.client.close();
  }
}
