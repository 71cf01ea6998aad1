"""Piecewise-linear transfer function mapping scalar values to color and opacity."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError


class TransferFunction:
    """Ordered control points (x, r, g, b, a); x strictly increasing from 0 to 1."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 5 or pts.shape[0] < 2:
            raise ConfigError("transfer function needs >= 2 control points of (x, r, g, b, a)")
        x = pts[:, 0]
        if x[0] != 0.0 or x[-1] != 1.0 or not (np.diff(x) > 0).all():
            raise ConfigError("control point x values must increase strictly from 0 to 1")
        if (pts[:, 1:] < 0).any() or (pts[:, 1:] > 1).any():
            raise ConfigError("color and opacity components must lie in [0,1]")
        self.points = pts
        self.points.flags.writeable = False

    def eval(self, values) -> np.ndarray:
        """Interpolated (N,4) rgba at each value; inputs clamp to [0,1]."""
        v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
        x = self.points[:, 0]
        out = np.empty(v.shape + (4,), dtype=np.float64)
        for c in range(4):
            out[..., c] = np.interp(v, x, self.points[:, c + 1])
        return out

    def lookup_table(self, size: int = 1024) -> np.ndarray:
        """Dense (size,4) f32 rgba table at evenly spaced values (cached)."""
        cached = getattr(self, "_lut", None)
        if cached is None or cached.shape[0] != size:
            cached = self.eval(np.linspace(0.0, 1.0, size)).astype(np.float32)
            object.__setattr__(self, "_lut", cached)
        return cached

    def eval_fast(self, values: np.ndarray, size: int = 1024) -> np.ndarray:
        """LUT-interpolated rgba; exact for values on table knots, ~1e-3 between."""
        lut = self.lookup_table(size)
        v = np.clip(values, 0.0, 1.0) * (size - 1)
        i0 = v.astype(np.intp)
        np.minimum(i0, size - 2, out=i0)
        f = (v - i0).astype(np.float32)[:, None]
        return lut[i0] * (1.0 - f) + lut[i0 + 1] * f

    def opacity(self, values) -> np.ndarray:
        v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
        return np.interp(v, self.points[:, 0], self.points[:, 4])

    def to_json(self) -> list:
        return [
            {"x": float(p[0]), "rgb": [float(p[1]), float(p[2]), float(p[3])], "a": float(p[4])}
            for p in self.points
        ]

    @classmethod
    def from_json(cls, data) -> "TransferFunction":
        try:
            pts = [[p["x"], p["rgb"][0], p["rgb"][1], p["rgb"][2], p["a"]] for p in data]
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"malformed transfer function JSON: {exc}") from exc
        return cls(pts)

    @classmethod
    def load(cls, path) -> "TransferFunction":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


def grayscale_ramp(max_opacity: float = 1.0) -> TransferFunction:
    return TransferFunction([[0.0, 0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0, max_opacity]])


def transparent() -> TransferFunction:
    return TransferFunction([[0.0, 0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0, 0.0]])


def warm_body(threshold: float = 0.35, max_opacity: float = 0.9) -> TransferFunction:
    """Opaque warm colors above a threshold, fully transparent below it."""
    t = float(np.clip(threshold, 0.01, 0.95))
    return TransferFunction(
        [
            [0.0, 0.0, 0.0, 0.1, 0.0],
            [t, 0.1, 0.05, 0.3, 0.0],
            [min(t + 0.15, 0.97), 0.9, 0.45, 0.1, 0.55 * max_opacity],
            [1.0, 1.0, 0.95, 0.8, max_opacity],
        ]
    )
