/**
 * Viewer session client: consumes frame/stats messages, emits controls.
 *
 * The server is authoritative: the local ViewerState mirrors the last
 * acknowledged hello plus the newest stats, and gestures only reach the
 * render state through a round-trip. The transport is pluggable so the
 * browser uses a WebSocket while tests can drive a raw TCP socket.
 */

import {
  KIND_ERROR,
  KIND_FRAME,
  KIND_HELLO,
  KIND_STATS,
  MessageDecoder,
  decodeFramePayload,
  encodeControl,
  parseJsonPayload,
  type FramePayload,
  type StatsPayload,
} from "./protocol.js";

export interface Transport {
  send(data: Uint8Array): void;
  close(): void;
  onData(handler: (chunk: Uint8Array) => void): void;
  onClose(handler: () => void): void;
}

export interface HelloPayload {
  width: number;
  height: number;
  dims: number[];
  max_lod: number;
  mode: string;
  format: string;
}

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface ClientEvents {
  hello?: (hello: HelloPayload) => void;
  frame?: (frame: FramePayload) => void;
  stats?: (stats: StatsPayload) => void;
  error?: (message: string) => void;
  status?: (status: ConnectionStatus) => void;
}

export class ViewerClient {
  status: ConnectionStatus = "connecting";
  hello: HelloPayload | null = null;
  latestStats: StatsPayload | null = null;
  latestFrame: FramePayload | null = null;
  framesReceived = 0;

  private decoder = new MessageDecoder();

  constructor(private transport: Transport, private events: ClientEvents = {}) {
    transport.onData((chunk) => this.handleChunk(chunk));
    transport.onClose(() => this.setStatus("disconnected"));
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.status !== status) {
      this.status = status;
      this.events.status?.(status);
    }
  }

  private handleChunk(chunk: Uint8Array): void {
    for (const message of this.decoder.feed(chunk)) {
      switch (message.kind) {
        case KIND_HELLO:
          this.hello = parseJsonPayload<HelloPayload>(message.payload);
          this.setStatus("connected");
          this.events.hello?.(this.hello);
          break;
        case KIND_FRAME: {
          const frame = decodeFramePayload(message.payload);
          this.latestFrame = frame; // newest frame wins; stale ones are dropped
          this.framesReceived += 1;
          this.events.frame?.(frame);
          break;
        }
        case KIND_STATS:
          this.latestStats = parseJsonPayload<StatsPayload>(message.payload);
          this.events.stats?.(this.latestStats);
          break;
        case KIND_ERROR:
          this.events.error?.(parseJsonPayload<{ error: string }>(message.payload).error);
          break;
        default:
          this.events.error?.(`unknown message kind ${message.kind}`);
      }
    }
  }

  sendControl(control: object): void {
    this.transport.send(encodeControl(control));
  }

  close(): void {
    this.transport.close();
    this.setStatus("disconnected");
  }
}

/** Browser transport: one protocol message per WebSocket binary frame. */
export function webSocketTransport(url: string, WebSocketImpl: any = (globalThis as any).WebSocket): Transport {
  const ws = new WebSocketImpl(url);
  ws.binaryType = "arraybuffer";
  let dataHandler: (chunk: Uint8Array) => void = () => {};
  let closeHandler: () => void = () => {};
  ws.onmessage = (event: any) => {
    const data = event.data instanceof ArrayBuffer ? new Uint8Array(event.data) : new Uint8Array(event.data.buffer ?? event.data);
    dataHandler(data);
  };
  ws.onclose = () => closeHandler();
  ws.onerror = () => {
    try {
      ws.close();
    } catch {
      /* already closed */
    }
  };
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onData: (handler) => {
      dataHandler = handler;
    },
    onClose: (handler) => {
      closeHandler = handler;
    },
  };
}

export interface ReconnectOptions {
  retryDelayMs?: number;
  maxRetries?: number;
}

/**
 * Keep a session alive across server restarts: on close, reports
 * disconnected and dials again after a delay.
 */
export class ReconnectingClient {
  client: ViewerClient | null = null;
  status: ConnectionStatus = "connecting";
  retries = 0;

  constructor(
    private dial: () => Transport,
    private events: ClientEvents = {},
    private options: ReconnectOptions = {},
  ) {
    this.connect();
  }

  private connect(): void {
    this.status = "connecting";
    this.events.status?.("connecting");
    const transport = this.dial();
    this.client = new ViewerClient(transport, {
      ...this.events,
      status: (status) => {
        this.status = status;
        this.events.status?.(status);
        if (status === "disconnected") this.scheduleRetry();
      },
    });
  }

  private scheduleRetry(): void {
    const max = this.options.maxRetries ?? Infinity;
    if (this.retries >= max) return;
    this.retries += 1;
    setTimeout(() => this.connect(), this.options.retryDelayMs ?? 1000);
  }

  sendControl(control: object): void {
    this.client?.sendControl(control);
  }

  close(): void {
    this.options = { ...this.options, maxRetries: 0 };
    this.client?.close();
  }
}
