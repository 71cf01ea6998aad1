import { describe, expect, it } from "vitest";

import {
  FORMAT_RGBA8,
  KIND_CONTROL,
  KIND_FRAME,
  MessageDecoder,
  decodeFramePayload,
  encodeControl,
  encodeMessage,
  parseJsonPayload,
} from "../src/protocol.js";

function frameBytes(frameId: number, width: number, height: number, pixels: Uint8Array): Uint8Array {
  const header = new Uint8Array(13 + pixels.length);
  const view = new DataView(header.buffer);
  header.set([0x43, 0x46, 0x52, 0x4d], 0); // "CFRM"
  view.setUint32(4, frameId, true);
  view.setUint16(8, width, true);
  view.setUint16(10, height, true);
  view.setUint8(12, FORMAT_RGBA8);
  header.set(pixels, 13);
  return encodeMessage(KIND_FRAME, header);
}

describe("message codec", () => {
  it("round-trips control messages", () => {
    const bytes = encodeControl({ type: "lod_scale", value: 1.5 });
    const decoder = new MessageDecoder();
    const messages = decoder.feed(bytes);
    expect(messages).toHaveLength(1);
    expect(messages[0].kind).toBe(KIND_CONTROL);
    expect(parseJsonPayload(messages[0].payload)).toEqual({ type: "lod_scale", value: 1.5 });
  });

  it("reassembles messages from ragged chunks", () => {
    const parts = [
      encodeControl({ type: "reset_cache" }),
      frameBytes(3, 2, 2, new Uint8Array(16).fill(7)),
      encodeControl({ type: "mode", value: "pathtrace" }),
    ];
    const stream = new Uint8Array(parts.reduce((n, p) => n + p.length, 0));
    let offset = 0;
    for (const part of parts) {
      stream.set(part, offset);
      offset += part.length;
    }
    const decoder = new MessageDecoder();
    const collected = [];
    for (let i = 0; i < stream.length; i += 3) {
      collected.push(...decoder.feed(stream.subarray(i, i + 3)));
    }
    expect(collected).toHaveLength(3);
    expect(collected.map((m) => m.kind)).toEqual([KIND_CONTROL, KIND_FRAME, KIND_CONTROL]);
  });

  it("decodes the bit-exact frame header", () => {
    const pixels = new Uint8Array(4 * 3 * 4).map((_, i) => i % 251);
    const message = new MessageDecoder().feed(frameBytes(42, 4, 3, pixels))[0];
    const frame = decodeFramePayload(message.payload);
    expect(frame.frameId).toBe(42);
    expect(frame.width).toBe(4);
    expect(frame.height).toBe(3);
    expect(frame.format).toBe(FORMAT_RGBA8);
    // lossless RGBA8: byte-identical to the payload
    expect(Array.from(frame.pixels)).toEqual(Array.from(pixels));
  });

  it("rejects bad magic and size mismatches", () => {
    const good = frameBytes(1, 2, 2, new Uint8Array(16));
    const message = new MessageDecoder().feed(good)[0];
    const corrupted = message.payload.slice();
    corrupted[0] = 0x58;
    expect(() => decodeFramePayload(corrupted)).toThrow(/magic/);
    expect(() => decodeFramePayload(message.payload.subarray(0, 20))).toThrow(/mismatch/);
  });
});
