"""Pinhole camera, primary-ray generation, and volume AABB intersection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class Camera:
    position: tuple[float, float, float]
    target: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    fov_y: float = 45.0
    width: int = 256
    height: int = 256

    def __post_init__(self):
        if not (0.0 < self.fov_y < 180.0):
            raise ConfigError(f"fov must be in (0, 180), got {self.fov_y}")
        fwd = np.asarray(self.target, dtype=np.float64) - np.asarray(self.position, dtype=np.float64)
        n = np.linalg.norm(fwd)
        if n == 0:
            raise ConfigError("camera position and target coincide")
        upv = np.asarray(self.up, dtype=np.float64)
        if np.linalg.norm(np.cross(fwd / n, upv)) < 1e-9:
            raise ConfigError("up vector is parallel to the view direction")

    def basis(self):
        fwd = np.asarray(self.target, dtype=np.float64) - np.asarray(self.position, dtype=np.float64)
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, dtype=np.float64))
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        return fwd, right, up

    def to_json(self) -> dict:
        return {
            "position": list(self.position),
            "target": list(self.target),
            "up": list(self.up),
            "fov": self.fov_y,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Camera":
        return cls(
            position=tuple(data["position"]),
            target=tuple(data["target"]),
            up=tuple(data.get("up", (0.0, 1.0, 0.0))),
            fov_y=float(data.get("fov", 45.0)),
            width=int(data.get("width", 256)),
            height=int(data.get("height", 256)),
        )

    @classmethod
    def load(cls, path) -> "Camera":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass
class RayBundle:
    """Compacted primary rays that hit the volume box."""

    pixel_index: np.ndarray  # (M,) flat row-major pixel ids
    origins: np.ndarray  # (M,3)
    directions: np.ndarray  # (M,3) unit
    t_enter: np.ndarray  # (M,)
    t_exit: np.ndarray

    def __len__(self):
        return self.origins.shape[0]


def ray_directions(camera: Camera) -> np.ndarray:
    """Unit direction through every pixel center, row-major (H*W, 3)."""
    fwd, right, up = camera.basis()
    tan_half = np.tan(np.radians(camera.fov_y) / 2.0)
    aspect = camera.width / camera.height
    px = (np.arange(camera.width) + 0.5) / camera.width * 2.0 - 1.0
    py = 1.0 - (np.arange(camera.height) + 0.5) / camera.height * 2.0
    xs, ys = np.meshgrid(px * tan_half * aspect, py * tan_half)
    dirs = fwd[None, None, :] + xs[..., None] * right[None, None, :] + ys[..., None] * up[None, None, :]
    dirs = dirs.reshape(-1, 3)
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def intersect_aabb(origins, directions, lo=0.0, hi=1.0):
    """Slab test against the axis-aligned box [lo,hi]^3; returns (t_enter, t_exit)."""
    o = np.asarray(origins, dtype=np.float64)
    d = np.asarray(directions, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(d != 0.0, 1.0 / d, np.inf)
    t_lo = (lo - o) * inv
    t_hi = (hi - o) * inv
    # rays parallel to a slab: inside contributes (-inf, inf), outside misses
    parallel = d == 0.0
    inside = (o >= lo) & (o <= hi)
    t_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), t_lo)
    t_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), t_hi)
    t_near = np.minimum(t_lo, t_hi).max(axis=-1)
    t_far = np.maximum(t_lo, t_hi).min(axis=-1)
    return t_near, t_far


_FILM_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _film_coords(width: int, height: int) -> np.ndarray:
    """Pixel-center film coordinates in [-1,1]^2, row-major, cached per film size."""
    key = (width, height)
    cached = _FILM_CACHE.get(key)
    if cached is None:
        px = (np.arange(width) + 0.5) / width * 2.0 - 1.0
        py = 1.0 - (np.arange(height) + 0.5) / height * 2.0
        xs, ys = np.meshgrid(px, py)
        cached = np.ascontiguousarray(np.stack([xs.ravel(), ys.ravel()], axis=1))
        _FILM_CACHE[key] = cached
    return cached


def generate_rays(camera: Camera) -> RayBundle:
    """One ray per pixel; rays that miss the unit box are compacted away."""
    from . import kernels

    fwd, right, up = camera.basis()
    rot = np.ascontiguousarray(np.stack([right, up, fwd], axis=1))
    tan_half = np.tan(np.radians(camera.fov_y) / 2.0)
    aspect = camera.width / camera.height
    base = _film_coords(camera.width, camera.height)
    n = base.shape[0]
    origin = np.asarray(camera.position, dtype=np.float64)
    dirs = np.empty((n, 3), dtype=np.float64)
    t0 = np.empty(n, dtype=np.float64)
    t1 = np.empty(n, dtype=np.float64)
    keep_mask = np.empty(n, dtype=np.bool_)
    kernels.raygen_pass(base, rot, origin, tan_half * aspect, tan_half, dirs, t0, t1, keep_mask)
    keep = np.flatnonzero(keep_mask)
    origins = np.empty((keep.size, 3), dtype=np.float64)
    origins[:] = origin
    return RayBundle(
        pixel_index=keep,
        origins=origins,
        directions=np.ascontiguousarray(dirs[keep]),
        t_enter=t0[keep],
        t_exit=t1[keep],
    )
