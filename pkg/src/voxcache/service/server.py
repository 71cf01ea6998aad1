"""Interactive session server: renders continuously, streams frames and stats.

Each connection owns a private RenderSession built by the server's
session factory (connections may share one loaded model; caches are
per-session). Control intake runs concurrently with rendering; the
newest control of each kind is applied at the next frame boundary, so
every frame reflects one consistent (camera, tf, lod_scale) tuple.
"""

from __future__ import annotations

import socket
import threading

import numpy as np

from ..errors import ProtocolError, VoxcacheError
from ..render.camera import Camera
from ..render.image_io import encode_png, to_rgba8
from ..render.transfer import TransferFunction
from . import protocol


class _Transport:
    """Raw-TCP or WebSocket transport speaking the same message codec."""

    def __init__(self, conn: socket.socket):
        self.conn = conn
        self.reader = protocol.MessageReader()
        self.ws_reader = None
        self.send_lock = threading.Lock()
        self._peeked = b""

    def negotiate(self):
        """Sniff the transport: WebSocket clients speak first (HTTP GET), raw
        TCP clients may stay silent, so a short peek decides."""
        self.conn.settimeout(0.2)
        try:
            head = self.conn.recv(4, socket.MSG_PEEK)
        except socket.timeout:
            head = b""
        self.conn.settimeout(None)
        if head != b"GET ":
            return
        first = b""
        while b"\r\n\r\n" not in first:
            chunk = self.conn.recv(4096)
            if not chunk:
                raise ConnectionError("client closed during WebSocket handshake")
            first += chunk
        self.conn.sendall(protocol.ws_handshake_response(first))
        self.ws_reader = protocol.WsReader()

    def send_message(self, data: bytes):
        framed = protocol.ws_encode(data) if self.ws_reader is not None else data
        with self.send_lock:
            self.conn.sendall(framed)

    def receive_messages(self):
        """Blocking generator over decoded (kind, payload) protocol messages."""
        while True:
            for item in self._drain():
                yield item
            chunk = self.conn.recv(65536)
            if not chunk:
                return
            if self.ws_reader is not None:
                self.ws_reader.feed(chunk)
            else:
                self.reader.feed(chunk)

    def _drain(self):
        if self.ws_reader is None:
            yield from self.reader
            return
        for kind, payload in self._ws_messages():
            self.reader.feed(payload)
        yield from self.reader

    def _ws_messages(self):
        for item in self.ws_reader:
            tag, payload = item
            if tag == "ping":
                with self.send_lock:
                    self.conn.sendall(protocol.ws_encode(payload, opcode=10))
            elif tag == "data":
                yield None, payload
        if self.ws_reader.closed:
            raise ConnectionError("WebSocket close frame")


class SessionHandler:
    def __init__(self, transport: _Transport, session, frame_format: int, max_fps: float | None = None):
        self.transport = transport
        self.session = session
        self.frame_format = frame_format
        self.max_fps = max_fps
        self._pending: dict[str, dict] = {}
        self._pending_lock = threading.Lock()
        self._closed = threading.Event()
        self._accum = None
        self._accum_count = 0

    # -- control intake ------------------------------------------------------

    def _control_loop(self):
        try:
            for _, payload in self.transport.receive_messages():
                try:
                    msg = protocol.parse_json(payload)
                    kind = msg.get("type")
                    if kind not in ("camera", "tf", "lod_scale", "mode", "reset_cache"):
                        raise ProtocolError(f"unknown control type {kind!r}")
                    self._validate(kind, msg)
                except (ProtocolError, VoxcacheError, KeyError, TypeError, ValueError) as exc:
                    self.transport.send_message(protocol.encode_json(protocol.KIND_ERROR, {"error": str(exc)}))
                    continue
                with self._pending_lock:
                    self._pending[kind] = msg  # latest-wins per control kind
        except (ConnectionError, OSError):
            pass
        finally:
            self._closed.set()

    @staticmethod
    def _validate(kind, msg):
        if kind == "camera":
            Camera(
                position=tuple(msg["position"]),
                target=tuple(msg["target"]),
                up=tuple(msg.get("up", (0, 1, 0))),
                fov_y=float(msg.get("fov", 45.0)),
            )
        elif kind == "tf":
            TransferFunction.from_json(msg["points"])
        elif kind == "lod_scale":
            value = float(msg["value"])
            if value < 0 or value > 1e6:
                raise ProtocolError("lod_scale out of range")
        elif kind == "mode":
            if msg["value"] not in ("raymarch", "pathtrace"):
                raise ProtocolError("mode must be raymarch or pathtrace")

    # -- frame loop ------------------------------------------------------------

    def _apply_pending(self) -> bool:
        with self._pending_lock:
            pending, self._pending = self._pending, {}
        if not pending:
            return False
        session = self.session
        if "camera" in pending:
            msg = pending["camera"]
            cam = session.scene.camera
            session.set_camera(
                Camera(
                    position=tuple(msg["position"]),
                    target=tuple(msg["target"]),
                    up=tuple(msg.get("up", (0, 1, 0))),
                    fov_y=float(msg.get("fov", cam.fov_y)),
                    width=cam.width,
                    height=cam.height,
                )
            )
        if "tf" in pending:
            session.set_transfer_function(TransferFunction.from_json(pending["tf"]["points"]))
        if "lod_scale" in pending:
            session.set_lod_scale(float(pending["lod_scale"]["value"]))
        if "mode" in pending:
            session.set_mode(pending["mode"]["value"])
        if "reset_cache" in pending:
            session.reset_cache()
        return True

    def run(self):
        session = self.session
        cam = session.scene.camera
        self.transport.send_message(
            protocol.encode_json(
                protocol.KIND_HELLO,
                {
                    "width": cam.width,
                    "height": cam.height,
                    "dims": list(session.field.domain.dims),
                    "max_lod": session.cache.max_lod if session.cache else 0,
                    "mode": session.mode,
                    "format": "png" if self.frame_format == protocol.FORMAT_PNG else "rgba8",
                },
            )
        )
        control = threading.Thread(target=self._control_loop, daemon=True)
        control.start()
        try:
            while not self._closed.is_set():
                changed = self._apply_pending()
                if changed:
                    self._accum = None
                    self._accum_count = 0
                try:
                    img, record = session.render_frame()
                except VoxcacheError as exc:
                    self.transport.send_message(protocol.encode_json(protocol.KIND_ERROR, {"error": str(exc), "fatal": True}))
                    return
                if session.mode == "pathtrace":
                    rgb = img.astype(np.float64)
                    if self._accum is None:
                        self._accum = rgb
                        self._accum_count = 1
                    else:
                        self._accum_count += 1
                        self._accum += (rgb - self._accum) / self._accum_count
                    img = self._accum.astype(np.float32)
                self._send_frame(record, img)
                self._send_stats(record)
        except (ConnectionError, OSError):
            pass
        finally:
            self._closed.set()
            session.close()

    def _send_frame(self, record, img):
        rgba = to_rgba8(img)
        if self.frame_format == protocol.FORMAT_PNG:
            payload = encode_png(rgba)
        else:
            payload = rgba.tobytes()
        h, w = rgba.shape[:2]
        self.transport.send_message(protocol.encode_frame(record.frame, w, h, self.frame_format, payload))

    def _send_stats(self, record):
        samples = max(record.samples, 1)
        self.transport.send_message(
            protocol.encode_json(
                protocol.KIND_STATS,
                {
                    "frame": record.frame,
                    "fps": round(record.fps, 3),
                    "true_miss_rate": record.true_misses / samples,
                    "fallback_rate": record.fallback_hits / samples,
                    "cache_occupancy": record.occupancy,
                    "requests_inflight": record.requests_inflight,
                    "bricks_loaded_total": record.bricks_loaded_total,
                },
            )
        )


class ViewerServer:
    """Accepts connections and runs one render session per client."""

    def __init__(self, session_factory, host: str = "127.0.0.1", port: int = 0, frame_format: int = protocol.FORMAT_RGBA8):
        self.session_factory = session_factory
        self.frame_format = frame_format
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(8)
        self.host, self.port = self._sock.getsockname()
        self._stop = threading.Event()
        self._thread = None

    def serve_forever(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            threading.Thread(target=self._handle, args=(conn,), daemon=True).start()

    def start(self):
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def _handle(self, conn: socket.socket):
        transport = _Transport(conn)
        try:
            transport.negotiate()
            handler = SessionHandler(transport, self.session_factory(), self.frame_format)
            handler.run()
        except (ConnectionError, OSError, ProtocolError):
            pass
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def stop(self):
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
        if self._thread is not None:
            self._thread.join(timeout=2.0)
