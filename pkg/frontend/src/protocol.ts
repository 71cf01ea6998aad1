/**
 * Wire codec for the render server protocol.
 *
 * Messages are length-prefixed: u32le length of (kind + payload), u8 kind,
 * payload bytes. Frame payloads carry their own header: magic "CFRM",
 * u32le frame id, u16le width, u16le height, u8 format (0 RGBA8, 1 PNG).
 * The same bytes flow over raw TCP (as a stream) or inside WebSocket
 * binary frames (one message per frame); the decoder below handles both.
 */

export const KIND_CONTROL = 1;
export const KIND_STATS = 2;
export const KIND_FRAME = 3;
export const KIND_ERROR = 4;
export const KIND_HELLO = 5;

export const FORMAT_RGBA8 = 0;
export const FORMAT_PNG = 1;

const FRAME_MAGIC = 0x4d524643; // "CFRM" little-endian

export interface Message {
  kind: number;
  payload: Uint8Array;
}

export interface FramePayload {
  frameId: number;
  width: number;
  height: number;
  format: number;
  pixels: Uint8Array;
}

export interface StatsPayload {
  frame: number;
  fps: number;
  true_miss_rate: number;
  fallback_rate: number;
  cache_occupancy: number;
  requests_inflight: number;
  bricks_loaded_total: number;
}

export function encodeMessage(kind: number, payload: Uint8Array): Uint8Array {
  const out = new Uint8Array(5 + payload.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, 1 + payload.length, true);
  out[4] = kind;
  out.set(payload, 5);
  return out;
}

export function encodeControl(control: object): Uint8Array {
  return encodeMessage(KIND_CONTROL, new TextEncoder().encode(JSON.stringify(control)));
}

export function decodeFramePayload(payload: Uint8Array): FramePayload {
  if (payload.length < 13) {
    throw new Error(`frame payload too short: ${payload.length}`);
  }
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  if (view.getUint32(0, true) !== FRAME_MAGIC) {
    throw new Error("bad frame magic");
  }
  const frameId = view.getUint32(4, true);
  const width = view.getUint16(8, true);
  const height = view.getUint16(10, true);
  const format = view.getUint8(12);
  const pixels = payload.subarray(13);
  if (format === FORMAT_RGBA8 && pixels.length !== width * height * 4) {
    throw new Error(`RGBA8 size mismatch: ${pixels.length} != ${width}x${height}x4`);
  }
  return { frameId, width, height, format, pixels };
}

export function parseJsonPayload<T>(payload: Uint8Array): T {
  return JSON.parse(new TextDecoder().decode(payload)) as T;
}

/** Incremental decoder: feed arbitrary chunks, pull complete messages. */
export class MessageDecoder {
  private buffer = new Uint8Array(0);

  feed(chunk: Uint8Array): Message[] {
    const merged = new Uint8Array(this.buffer.length + chunk.length);
    merged.set(this.buffer, 0);
    merged.set(chunk, this.buffer.length);
    this.buffer = merged;

    const out: Message[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const view = new DataView(this.buffer.buffer, this.buffer.byteOffset, this.buffer.byteLength);
      const length = view.getUint32(0, true);
      if (length < 1) throw new Error(`bad message length ${length}`);
      if (this.buffer.length < 4 + length) break;
      const kind = this.buffer[4];
      const payload = this.buffer.slice(5, 4 + length);
      this.buffer = this.buffer.slice(4 + length);
      out.push({ kind, payload });
    }
    return out;
  }
}
