"""Wire protocol for interactive sessions.

Every message is length-prefixed:

    u32le  length of (kind byte + payload)
    u8     kind
    bytes  payload

Kinds: 1 control (JSON), 2 stats (JSON), 3 frame (binary), 4 error
(JSON), 5 hello (JSON). Frame payloads carry their own bit-exact
header:

    4s    magic "CFRM"
    u32le frame id
    u16le width
    u16le height
    u8    format (0 = RGBA8, 1 = PNG)
    bytes pixels

The same byte stream runs over raw TCP or inside WebSocket binary
frames (one protocol message per WS frame), so native and browser
clients share one codec.
"""

from __future__ import annotations

import base64
import hashlib
import json
import struct

from ..errors import ProtocolError

KIND_CONTROL = 1
KIND_STATS = 2
KIND_FRAME = 3
KIND_ERROR = 4
KIND_HELLO = 5

FRAME_MAGIC = b"CFRM"
FORMAT_RGBA8 = 0
FORMAT_PNG = 1

_HEADER = struct.Struct("<I")
_FRAME_HEADER = struct.Struct("<4sIHHB")

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def encode_message(kind: int, payload: bytes) -> bytes:
    body = bytes([kind]) + payload
    return _HEADER.pack(len(body)) + body


def encode_json(kind: int, obj) -> bytes:
    return encode_message(kind, json.dumps(obj).encode("utf-8"))


def encode_frame(frame_id: int, width: int, height: int, fmt: int, pixels: bytes) -> bytes:
    header = _FRAME_HEADER.pack(FRAME_MAGIC, frame_id, width, height, fmt)
    return encode_message(KIND_FRAME, header + pixels)


def decode_frame_payload(payload: bytes):
    if len(payload) < _FRAME_HEADER.size:
        raise ProtocolError("frame payload shorter than its header")
    magic, frame_id, width, height, fmt = _FRAME_HEADER.unpack_from(payload)
    if magic != FRAME_MAGIC:
        raise ProtocolError(f"bad frame magic {magic!r}")
    if fmt not in (FORMAT_RGBA8, FORMAT_PNG):
        raise ProtocolError(f"unknown frame format {fmt}")
    pixels = payload[_FRAME_HEADER.size :]
    if fmt == FORMAT_RGBA8 and len(pixels) != width * height * 4:
        raise ProtocolError(f"RGBA8 payload size {len(pixels)} != {width}*{height}*4")
    return frame_id, width, height, fmt, pixels


class MessageReader:
    """Incremental decoder: feed bytes, iterate complete (kind, payload) messages."""

    def __init__(self, max_message: int = 1 << 26):
        self._buf = bytearray()
        self.max_message = max_message

    def feed(self, data: bytes):
        self._buf.extend(data)

    def __iter__(self):
        return self

    def __next__(self):
        if len(self._buf) < 4:
            raise StopIteration
        (length,) = _HEADER.unpack_from(self._buf)
        if length < 1 or length > self.max_message:
            raise ProtocolError(f"message length {length} out of range")
        if len(self._buf) < 4 + length:
            raise StopIteration
        kind = self._buf[4]
        payload = bytes(self._buf[5 : 4 + length])
        del self._buf[: 4 + length]
        return kind, payload


def parse_json(payload: bytes):
    try:
        return json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed JSON payload: {exc}") from exc


# -- WebSocket framing (RFC 6455, server side) ---------------------------------


def ws_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_handshake_response(request: bytes) -> bytes:
    lines = request.split(b"\r\n")
    headers = {}
    for line in lines[1:]:
        if b":" in line:
            name, _, value = line.partition(b":")
            headers[name.strip().lower()] = value.strip()
    key = headers.get(b"sec-websocket-key")
    if key is None:
        raise ProtocolError("WebSocket upgrade without Sec-WebSocket-Key")
    accept = ws_accept_key(key.decode("ascii"))
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
    ).encode("ascii")


def ws_encode(payload: bytes, opcode: int = 2) -> bytes:
    n = len(payload)
    head = bytes([0x80 | opcode])
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


class WsReader:
    """Incremental WebSocket frame decoder for masked client frames."""

    def __init__(self):
        self._buf = bytearray()
        self.closed = False

    def feed(self, data: bytes):
        self._buf.extend(data)

    def __iter__(self):
        return self

    def __next__(self):
        buf = self._buf
        if len(buf) < 2:
            raise StopIteration
        b0, b1 = buf[0], buf[1]
        opcode = b0 & 0x0F
        masked = b1 & 0x80
        length = b1 & 0x7F
        offset = 2
        if length == 126:
            if len(buf) < 4:
                raise StopIteration
            length = struct.unpack_from(">H", buf, 2)[0]
            offset = 4
        elif length == 127:
            if len(buf) < 10:
                raise StopIteration
            length = struct.unpack_from(">Q", buf, 2)[0]
            offset = 10
        mask = b""
        if masked:
            if len(buf) < offset + 4:
                raise StopIteration
            mask = bytes(buf[offset : offset + 4])
            offset += 4
        if len(buf) < offset + length:
            raise StopIteration
        payload = bytes(buf[offset : offset + length])
        del buf[: offset + length]
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        if opcode == 8:
            self.closed = True
            raise StopIteration
        if opcode in (9,):  # ping: caller answers with pong
            return ("ping", payload)
        if opcode in (1, 2):
            return ("data", payload)
        if opcode == 10:  # pong
            return ("pong", payload)
        raise ProtocolError(f"unsupported WebSocket opcode {opcode}")
