"""Image output: 8-bit RGBA PNG (stdlib zlib) and flat binary f32 RGBA."""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def to_rgba8(image: np.ndarray) -> np.ndarray:
    """Float image (H,W,3|4) in [0,1] to uint8 RGBA (H,W,4)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] not in (3, 4):
        raise ValueError(f"expected (H,W,3|4) image, got {img.shape}")
    if img.shape[2] == 3:
        img = np.concatenate([img, np.ones(img.shape[:2] + (1,))], axis=2)
    return (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def encode_png(image: np.ndarray) -> bytes:
    """Encode a float or uint8 RGBA image as an 8-bit PNG byte string."""
    rgba = image if image.dtype == np.uint8 else to_rgba8(image)
    h, w = rgba.shape[:2]
    raw = b"".join(b"\x00" + rgba[row].tobytes() for row in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 6, 0, 0, 0)
    return (
        PNG_SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", zlib.compress(raw, 6))
        + _chunk(b"IEND", b"")
    )


def write_png(path, image: np.ndarray):
    Path(path).write_bytes(encode_png(image))


def write_raw_rgba(path, image: np.ndarray):
    """Flat little-endian f32 RGBA dump, row-major."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] not in (3, 4):
        raise ValueError(f"expected (H,W,3|4) image, got {img.shape}")
    if img.shape[2] == 3:
        img = np.concatenate([img, np.ones(img.shape[:2] + (1,))], axis=2)
    Path(path).write_bytes(img.astype("<f4").tobytes())
