/**
 * End-to-end session against the real render server over WebSocket:
 * connect and receive frames, steer the camera, zero out the transfer
 * function, and watch the cache-occupancy dashboard.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { createInterface } from "node:readline";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { ViewerClient, webSocketTransport } from "../src/client.js";
import { Dashboard } from "../src/dashboard.js";
import { DEFAULT_ORBIT, applyDrag, toCameraMessage } from "../src/orbit.js";
import { TfEditor } from "../src/tf.js";
import type { FramePayload } from "../src/protocol.js";

let server: ChildProcess;
let port = 0;

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "voxcache.cli", "serve", "--procedural", "sphere", "--dims", "48", "--port", "0", "--width", "64", "--height", "64"],
    { stdio: ["ignore", "pipe", "pipe"], cwd: `${__dirname}/../..` },
  );
  port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 30_000);
    createInterface({ input: server.stdout! }).on("line", (line) => {
      const match = /listening on .*:(\d+)/.exec(line);
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
  });
}, 40_000);

afterAll(() => {
  server?.kill();
});

interface Session {
  client: ViewerClient;
  frames: FramePayload[];
  dashboard: Dashboard;
  waitForFrames(count: number, timeoutMs?: number): Promise<void>;
  close(): void;
}

function connect(): Promise<Session> {
  return new Promise((resolve, reject) => {
    const transport = webSocketTransport(`ws://127.0.0.1:${port}`, WebSocket);
    const frames: FramePayload[] = [];
    const dashboard = new Dashboard();
    const waiters: { remaining: number; resolve: () => void }[] = [];
    const timer = setTimeout(() => reject(new Error("no hello from server")), 20_000);
    const client = new ViewerClient(transport, {
      hello: () => {
        clearTimeout(timer);
        resolve(session);
      },
      frame: (frame) => {
        frames.push(frame);
        for (const waiter of [...waiters]) {
          waiter.remaining -= 1;
          if (waiter.remaining <= 0) {
            waiters.splice(waiters.indexOf(waiter), 1);
            waiter.resolve();
          }
        }
      },
      stats: (stats) => dashboard.push(stats),
    });
    const session: Session = {
      client,
      frames,
      dashboard,
      waitForFrames: (count, timeoutMs = 20_000) =>
        new Promise<void>((res, rej) => {
          const t = setTimeout(() => rej(new Error(`timed out waiting for ${count} frames`)), timeoutMs);
          waiters.push({
            remaining: count,
            resolve: () => {
              clearTimeout(t);
              res();
            },
          });
        }),
      close: () => client.close(),
    };
  });
}

function changedFraction(a: FramePayload, b: FramePayload): number {
  let changed = 0;
  const pixels = a.width * a.height;
  for (let i = 0; i < pixels; i++) {
    const off = i * 4;
    if (
      Math.abs(a.pixels[off] - b.pixels[off]) > 2 ||
      Math.abs(a.pixels[off + 1] - b.pixels[off + 1]) > 2 ||
      Math.abs(a.pixels[off + 2] - b.pixels[off + 2]) > 2
    ) {
      changed += 1;
    }
  }
  return changed / pixels;
}

describe("live session round-trip", () => {
  it("connects, receives frames, and the occupancy chart is monotone", async () => {
    const session = await connect();
    try {
      await session.waitForFrames(12);
      expect(session.client.status).toBe("connected");
      expect(session.frames.length).toBeGreaterThanOrEqual(12);
      const ids = session.frames.map((f) => f.frameId);
      expect([...ids].sort((a, b) => a - b)).toEqual(ids);
      expect(session.dashboard.occupancy.length).toBeGreaterThan(4);
      expect(session.dashboard.occupancy.isNonDecreasing()).toBe(true);
    } finally {
      session.close();
    }
  }, 40_000);

  it("a camera drag changes the image within 200 ms", async () => {
    const session = await connect();
    try {
      await session.waitForFrames(8); // let the view settle
      const before = session.frames[session.frames.length - 1];
      const dragged = applyDrag(DEFAULT_ORBIT, 0.6 * Math.PI * 100, 0); // strong swing
      const sentAt = Date.now();
      session.client.sendControl(toCameraMessage(dragged));
      let winner: { fraction: number; latencyMs: number } | null = null;
      while (Date.now() - sentAt < 5_000) {
        await session.waitForFrames(1, 10_000);
        const frame = session.frames[session.frames.length - 1];
        const fraction = changedFraction(frame, before);
        if (fraction >= 0.01) {
          winner = { fraction, latencyMs: Date.now() - sentAt };
          break;
        }
      }
      expect(winner).not.toBeNull();
      expect(winner!.fraction).toBeGreaterThanOrEqual(0.01);
      expect(winner!.latencyMs).toBeLessThanOrEqual(200);
    } finally {
      session.close();
    }
  }, 40_000);

  it("an all-transparent transfer function yields background frames", async () => {
    const session = await connect();
    try {
      await session.waitForFrames(4);
      const tf = new TfEditor();
      tf.addPoint(0.5, 0.9);
      tf.setAllOpacity(0);
      session.client.sendControl(tf.toMessage());
      let background = false;
      const deadline = Date.now() + 5_000;
      while (Date.now() < deadline && !background) {
        await session.waitForFrames(1, 10_000);
        const frame = session.frames[session.frames.length - 1];
        background = frame.pixels.every((v, i) => (i % 4 === 3 ? true : v === 0));
      }
      expect(background).toBe(true);
    } finally {
      session.close();
    }
  }, 40_000);
});
