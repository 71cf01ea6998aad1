"""Multiresolution hash-grid encoder.

Each level is a 3D grid of trainable feature vectors at geometrically
growing resolution. A query position interpolates the 8 surrounding
vertex features per level; level slices concatenate coarsest-first.
Coarse levels whose dense vertex count fits the table are indexed
densely (collision-free); finer levels hash vertex coordinates into the
fixed-size table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

# fixed large odd multipliers for the coordinate-wise spatial hash
_HASH_PRIMES = (2654435761, 2246822519, 3266489917)

# corner offsets of a grid cell, x-fastest
_CORNERS = np.array(
    [[i, j, k] for k in (0, 1) for j in (0, 1) for i in (0, 1)],
    dtype=np.int64,
)


@dataclass(frozen=True)
class HashGridConfig:
    levels: int = 8
    features_per_entry: int = 2
    base_resolution: int = 4
    growth_factor: float = 1.5
    table_size: int = 1 << 16

    def __post_init__(self):
        if self.levels < 1 or self.features_per_entry < 1:
            raise ConfigError("levels and features_per_entry must be >= 1")
        if self.growth_factor <= 1.0:
            raise ConfigError("growth_factor must be > 1")
        if self.base_resolution < 1:
            raise ConfigError("base_resolution must be >= 1")
        t = self.table_size
        if t < 1 or (t & (t - 1)) != 0:
            raise ConfigError("table_size must be a power of two")

    def resolution(self, level: int) -> int:
        return int(np.floor(self.base_resolution * self.growth_factor**level))

    def resolutions(self) -> list[int]:
        return [self.resolution(l) for l in range(self.levels)]

    def level_entries(self, level: int) -> int:
        """Dense vertex count when it fits the table, else the hash table size."""
        dense = (self.resolution(level) + 1) ** 3
        return dense if dense <= self.table_size else self.table_size

    def level_is_dense(self, level: int) -> bool:
        return (self.resolution(level) + 1) ** 3 <= self.table_size

    @property
    def output_dim(self) -> int:
        return self.levels * self.features_per_entry


def vertex_indices(config: HashGridConfig, level: int, vertices: np.ndarray) -> np.ndarray:
    """Table index for integer vertex coordinates (..., 3); deterministic per level."""
    v = vertices.astype(np.uint64)
    if config.level_is_dense(level):
        side = np.uint64(config.resolution(level) + 1)
        return (v[..., 0] + side * (v[..., 1] + side * v[..., 2])).astype(np.int64)
    h = v[..., 0] * np.uint64(_HASH_PRIMES[0])
    h ^= v[..., 1] * np.uint64(_HASH_PRIMES[1])
    h ^= v[..., 2] * np.uint64(_HASH_PRIMES[2])
    return (h & np.uint64(config.table_size - 1)).astype(np.int64)


def _axis_indices(config: HashGridConfig, level: int, c0: np.ndarray):
    """Hash (or dense-index) contributions per axis for corner offsets 0 and 1."""
    v = c0.astype(np.uint64)
    v1 = v + np.uint64(1)
    if config.level_is_dense(level):
        side = np.uint64(config.resolution(level) + 1)
        mults = (np.uint64(1), side, side * side)
        return [(v[:, a] * mults[a], v1[:, a] * mults[a]) for a in range(3)], "sum"
    primes = [np.uint64(p) for p in _HASH_PRIMES]
    return [(v[:, a] * primes[a], v1[:, a] * primes[a]) for a in range(3)], "xor"


def interpolation_data(config: HashGridConfig, level: int, positions: np.ndarray):
    """Per-sample corner table indices (N,8) and trilinear weights (N,8)."""
    r = config.resolution(level)
    u = np.asarray(positions, dtype=np.float64) * r
    c0 = np.floor(u).astype(np.int64)
    np.clip(c0, 0, r - 1, out=c0)
    frac = u - c0
    n = u.shape[0]

    axis_parts, mode = _axis_indices(config, level, c0)
    idx = np.empty((n, 8), dtype=np.int64)
    w = np.empty((n, 8), dtype=np.float64)
    fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
    wx = (1.0 - fx, fx)
    wy = (1.0 - fy, fy)
    wz = (1.0 - fz, fz)
    mask = np.uint64(config.table_size - 1)
    for c, (dx, dy, dz) in enumerate(_CORNERS):
        if mode == "sum":
            h = axis_parts[0][dx] + axis_parts[1][dy] + axis_parts[2][dz]
            idx[:, c] = h.astype(np.int64)
        else:
            h = axis_parts[0][dx] ^ axis_parts[1][dy] ^ axis_parts[2][dz]
            idx[:, c] = (h & mask).astype(np.int64)
        w[:, c] = wx[dx] * wy[dy] * wz[dz]
    return idx, w


def encode(config: HashGridConfig, tables: list[np.ndarray], positions: np.ndarray, with_cache: bool = False):
    """Feature vector (N, levels * features) for positions in [0,1)^3, coarsest level first."""
    pos = np.asarray(positions, dtype=np.float64)
    n = pos.shape[0]
    nf = config.features_per_entry
    dtype = tables[0].dtype
    out = np.zeros((n, config.output_dim), dtype=dtype)
    cache = []
    for level in range(config.levels):
        idx, w = interpolation_data(config, level, pos)
        wd = w.astype(dtype, copy=False) if dtype != np.float64 else w
        gathered = tables[level][idx]  # (N, 8, nf)
        out[:, level * nf : (level + 1) * nf] = np.einsum("nc,ncf->nf", wd, gathered)
        if with_cache:
            cache.append((idx, w))
    return (out, cache) if with_cache else out


def encode_backward(config: HashGridConfig, cache, d_features: np.ndarray, table_sizes: list[int], dtype):
    """Scatter feature gradients back into per-level table gradients."""
    nf = config.features_per_entry
    grads = []
    for level, (idx, w) in enumerate(cache):
        d_slice = d_features[:, level * nf : (level + 1) * nf]  # (N, nf)
        t = table_sizes[level]
        g = np.empty((t, nf), dtype=np.float64)
        flat_idx = idx.ravel()
        for f in range(nf):
            contrib = (w * d_slice[:, f : f + 1]).ravel()
            g[:, f] = np.bincount(flat_idx, weights=contrib, minlength=t)
        grads.append(g.astype(dtype))
    return grads
