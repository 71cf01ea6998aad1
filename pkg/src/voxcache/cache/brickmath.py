"""Brick coordinate arithmetic shared by the page-table cache and the request loader.

A brick holds B^3 samples. At level of detail L the sample stride is
2^L native voxels, so one brick spans roughly (B * 2^L)^3 voxels. Brick
index k along an axis starts at native coordinate

    origin(k) = k * B * 2^L - 1      (k > 0; brick 0 starts at 0)

The single subtracted voxel gives brick 0 and brick 1 a shared boundary
sample; bricks further along the axis are packed end to end. The inverse
mapping locate(p) = floor((p + 1) / (B * 2^L)) assigns every native
position to exactly one owning brick (boundary samples go to the
higher-index brick). Queries that land in the sub-voxel sliver just
before a brick's origin clamp to the previous brick's last sample, a
bias of at most one voxel that vanishes at LoD 0 lattice positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def lod_stride(lod: int) -> int:
    """Native-voxel spacing between samples of a brick at this LoD."""
    return 1 << lod


def brick_span(brick_size: int, lod: int) -> int:
    """Native voxels per brick index step along one axis."""
    return brick_size << lod


def brick_origin(index, brick_size: int, lod: int):
    """Native coordinate of a brick's first sample, per axis (vectorized)."""
    index = np.asarray(index, dtype=np.int64)
    origin = index * brick_span(brick_size, lod)
    return np.where(index > 0, origin - 1, origin)


def locate_axis(position, brick_size: int, lod: int):
    """Owning brick index along one axis for a native coordinate (unclamped)."""
    span = brick_span(brick_size, lod)
    return np.floor((np.asarray(position, dtype=np.float64) + 1.0) / span).astype(np.int64)


def grid_dims_axis(voxels: int, brick_size: int, lod: int) -> int:
    """Bricks needed along one axis so every native voxel is owned and covered."""
    s = lod_stride(lod)
    if voxels <= (brick_size - 1) * s + 1:
        return 1
    return int(-(-(voxels + s) // brick_span(brick_size, lod)))


def grid_dims(dims, brick_size: int, lod: int) -> tuple[int, int, int]:
    return tuple(grid_dims_axis(v, brick_size, lod) for v in dims)


def max_lod(dims, brick_size: int) -> int:
    """Coarsest useful level: the first LoD where a single brick covers the volume."""
    lod = 0
    while grid_dims(dims, brick_size, lod) != (1, 1, 1):
        lod += 1
        if lod > 48:
            raise ValueError(f"no single-brick LoD for dims {dims} at brick size {brick_size}")
    return lod


@dataclass(frozen=True)
class BrickKey:
    """Identity of one brick: level of detail plus 3D grid index."""

    lod: int
    index: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))

    def linear_index(self, grid: tuple[int, int, int]) -> int:
        """x-fastest flat index inside this LoD's brick grid."""
        i, j, k = self.index
        gx, gy, _ = grid
        return i + gx * (j + gy * k)


class BrickLayout:
    """Per-volume brick geometry: grids for every LoD and coordinate transforms."""

    def __init__(self, dims, brick_size: int):
        if brick_size < 2:
            raise ValueError("brick_size must be >= 2")
        self.dims = tuple(int(d) for d in dims)
        self.brick_size = int(brick_size)
        self.max_lod = max_lod(self.dims, self.brick_size)
        self.grids = [grid_dims(self.dims, self.brick_size, lod) for lod in range(self.max_lod + 1)]

    def brick_count(self, lod: int) -> int:
        gx, gy, gz = self.grids[lod]
        return gx * gy * gz

    def total_bricks(self) -> int:
        return sum(self.brick_count(lod) for lod in range(self.max_lod + 1))

    def locate(self, positions: np.ndarray, lod: int):
        """Map native positions (N,3) to brick indices (N,3) and in-brick sample coords (N,3).

        Local coordinates are clamped to [0, B-1]; callers interpolate
        within the returned brick only.
        """
        if lod > self.max_lod:
            raise ValueError(f"lod {lod} exceeds max_lod {self.max_lod}")
        pos = np.asarray(positions, dtype=np.float64)
        grid = np.asarray(self.grids[lod], dtype=np.int64)
        idx = locate_axis(pos, self.brick_size, lod)
        np.clip(idx, 0, grid - 1, out=idx)
        origin = brick_origin(idx, self.brick_size, lod)
        local = (pos - origin) / lod_stride(lod)
        np.clip(local, 0.0, self.brick_size - 1, out=local)
        return idx, local

    def origin(self, key: BrickKey) -> tuple[int, int, int]:
        return tuple(int(v) for v in brick_origin(np.asarray(key.index), self.brick_size, key.lod))

    def sample_positions(self, key: BrickKey):
        """Native and normalized coordinates of all B^3 samples of a brick, x-fastest.

        Positions past the volume edge clamp to the last valid lattice
        position, so edge bricks repeat their border samples.
        """
        b = self.brick_size
        stride = lod_stride(key.lod)
        origin = np.asarray(self.origin(key), dtype=np.int64)
        axis = np.arange(b, dtype=np.int64) * stride
        zz, yy, xx = np.meshgrid(axis, axis, axis, indexing="ij")
        native = np.stack([xx.ravel(), yy.ravel(), zz.ravel()], axis=1) + origin
        np.clip(native, 0, np.asarray(self.dims, dtype=np.int64) - 1, out=native)
        normalized = (native + 0.5) / np.asarray(self.dims, dtype=np.float64)
        return native, normalized

    def keys_at(self, lod: int):
        gx, gy, gz = self.grids[lod]
        for k in range(gz):
            for j in range(gy):
                for i in range(gx):
                    yield BrickKey(lod, (i, j, k))

    def valid_key(self, key: BrickKey) -> bool:
        if not 0 <= key.lod <= self.max_lod:
            return False
        return all(0 <= key.index[a] < self.grids[key.lod][a] for a in range(3))
