"""Per-sample LoD selection, cache querying, and batched miss resolution.

The level of detail for a sample is distance-driven: D = distance *
lod_scale, taking LoD floor(D)+1 with probability frac(D) so the
expected LoD is continuous in distance and LoD transitions dissolve
into noise instead of rings. The first frames of a session force the
coarsest LoD and ease into the user's scale so the cache acquires a
whole-volume fallback before fine bricks stream in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RenderError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x):
    """Stateless 64-bit mixer used to derive per-frame, per-lane seeds."""
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        z = (np.asarray(x, dtype=np.uint64) + _GOLDEN).astype(np.uint64)
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


class XorShift32:
    """Vector of 32-bit xorshift generators, reseeded per frame."""

    def __init__(self, seed: int = 0, frame: int = 0, lanes: int = 1):
        self.seed_frame(seed, frame, lanes)

    def seed_frame(self, seed: int, frame: int, lanes: int):
        with np.errstate(over="ignore"):  # uint64 wraparound is the point
            base = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ (np.uint64(frame) * _GOLDEN))
            lane_seeds = splitmix64(base + np.arange(lanes, dtype=np.uint64))
        state = (lane_seeds & np.uint64(0xFFFFFFFF)).astype(np.uint32)
        state[state == 0] = np.uint32(0x9E3779B9)
        self.state = state

    def next_uniform(self) -> np.ndarray:
        """Advance every lane once; returns uniforms in [0,1)."""
        return self.uniform(self.state.shape[0])

    def uniform(self, n: int) -> np.ndarray:
        """Advance the first n lanes once; returns uniforms in [0,1)."""
        x = self.state[:n]
        x = x ^ (x << np.uint32(13))
        x = x ^ (x >> np.uint32(17))
        x = x ^ (x << np.uint32(5))
        self.state[:n] = x
        return x.astype(np.float64) / 4294967296.0


@dataclass
class LodPolicy:
    """User LoD scale plus the preload ramp toward it."""

    lod_scale: float = 1.0
    preload_frames: int = 120
    mode: str = "corrected"  # corrected | as_printed | off


def effective_lod_scale(policy: LodPolicy, frame: int, force_scale: float) -> float:
    """Per-frame scale: starts at force_scale (everything coarse) and ramps linearly
    down to the user scale by frame preload_frames."""
    k = policy.preload_frames
    if frame >= k or force_scale <= policy.lod_scale:
        return policy.lod_scale
    t = frame / k
    return policy.lod_scale + (force_scale - policy.lod_scale) * (1.0 - t)


def force_max_scale(max_lod: int, min_distance: float) -> float:
    """A scale large enough that every sample at least min_distance away picks max_lod."""
    return (max_lod + 1.0) / max(min_distance, 1e-6)


def select_lod(distances, lod_scale: float, rng: XorShift32, max_lod: int, mode: str = "corrected"):
    """Stochastic LoD per sample; E[lod] = clamp(distance * lod_scale) in corrected mode."""
    d = np.asarray(distances, dtype=np.float64) * lod_scale
    base = np.floor(d)
    frac = d - base
    if mode == "off":
        lod = base
    else:
        u = rng.uniform(d.shape[0])
        if mode == "corrected":
            lod = base + (u < frac)
        elif mode == "as_printed":
            lod = base + (u > frac)
        else:
            raise ValueError(f"unknown stochastic lod mode {mode!r}")
    return np.clip(lod, 0, max_lod).astype(np.int64)


@dataclass
class MissList:
    """Output slots that no cached brick could serve, pending field inference."""

    positions: np.ndarray  # (M,3) normalized coords
    indices: np.ndarray  # (M,) destination rows in the output array

    def __len__(self):
        return self.positions.shape[0]


def world_to_native(positions_world: np.ndarray, dims) -> np.ndarray:
    """World unit-cube coordinates to native lattice coordinates (sample i at i)."""
    return positions_world * np.asarray(dims, dtype=np.float64) - 0.5


def clamp_normalized(positions_world: np.ndarray) -> np.ndarray:
    return np.clip(positions_world, 0.0, np.nextafter(1.0, 0.0))


def sample_batch(cache, positions_world, camera_pos, policy: LodPolicy, frame: int, rng: XorShift32, scale: float):
    """Resolve one batch against the cache: values plus the list of true misses.

    Hits (exact or fallback) fill immediately; true misses are recorded
    with their output index and left at 0 until resolve_misses runs.
    With no cache every sample is a miss.
    """
    pos = np.asarray(positions_world, dtype=np.float64)
    n = pos.shape[0]
    values = np.zeros(n, dtype=np.float32)
    if cache is None:
        return values, MissList(clamp_normalized(pos), np.arange(n))
    distances = np.linalg.norm(pos - np.asarray(camera_pos, dtype=np.float64), axis=1)
    lods = select_lod(distances, scale, rng, cache.max_lod, policy.mode)
    native = world_to_native(pos, cache.layout.dims)
    result = cache.lookup(native, lods)
    values[:] = result.values
    miss_rows = np.flatnonzero(result.miss_mask)
    values[miss_rows] = 0.0
    return values, MissList(clamp_normalized(pos[miss_rows]), miss_rows)


def resolve_misses(field_src, misses: MissList, outputs: np.ndarray):
    """One field batch over every missed coordinate, written back in place."""
    if len(misses) == 0:
        return outputs
    try:
        resolved = field_src.sample_batch(misses.positions)
    except Exception as exc:
        raise RenderError(f"miss resolution failed: {exc}") from exc
    outputs[misses.indices] = resolved
    return outputs


class VolumeSampler:
    """The single sampling function both render pipelines consume.

    Wraps select-LoD -> cache lookup -> miss inference, and accumulates
    per-frame hit/miss statistics. ``cache=None`` gives the uncached
    baseline where every sample is inferred from the field.
    """

    def __init__(self, field_src, dims, cache=None, policy: LodPolicy | None = None, seed: int = 0):
        self.field = field_src
        self.dims = tuple(dims)
        self.cache = cache
        self.policy = policy or LodPolicy()
        self.seed = seed
        self.rng = XorShift32(seed, 0, 1)
        self.frame = 0
        self.camera_pos = np.zeros(3)
        self._scale = self.policy.lod_scale
        self.reset_frame_stats()

    def reset_frame_stats(self):
        self.frame_requests = 0
        self.frame_true_misses = 0
        self.frame_fallback_hits = 0

    def begin_frame(self, frame: int, camera_pos):
        self.frame = frame
        self.camera_pos = np.asarray(camera_pos, dtype=np.float64)
        self.reset_frame_stats()
        self._needs_reseed = True
        # residency only changes between frames, so the packed tables hold all frame
        self._frame_kernel_state = self.cache.kernel_state() if self.cache is not None else None
        if self.cache is not None:
            d_min = _point_to_unit_box(self.camera_pos)
            force = force_max_scale(self.cache.max_lod, d_min)
            self._scale = effective_lod_scale(self.policy, frame, force)
        else:
            self._scale = self.policy.lod_scale

    def sample(self, positions_world, distances=None) -> np.ndarray:
        """Resolve one batch: cache probe (or direct field), then miss inference.

        ``distances`` are camera distances per sample; the render loop
        passes its ray parameters, other callers let them be computed.
        """
        pos = np.asarray(positions_world, dtype=np.float64)
        n = pos.shape[0]
        if n == 0:
            return np.zeros(0, dtype=np.float32)
        if getattr(self, "_needs_reseed", True):
            self.rng.seed_frame(self.seed, self.frame, n)
            self._needs_reseed = False
            self._reseed_salt = 0
        elif self.rng.state.shape[0] < n:
            # a mid-frame batch outgrew the lane pool: fresh distinct seeds
            self._reseed_salt = getattr(self, "_reseed_salt", 0) + 1
            self.rng.seed_frame(self.seed, self.frame * 1000003 + self._reseed_salt, n)

        if self.cache is not None:
            ks = self._frame_kernel_state
            if ks is not None:
                return self._sample_kernel(pos, distances, ks)
        values, misses = sample_batch(self.cache, pos, self.camera_pos, self.policy, self.frame, self.rng, self._scale)
        self.frame_requests += n
        self.frame_true_misses += len(misses)
        if self.cache is not None:
            self.frame_fallback_hits = self.cache.stats.fallback_hits
        if len(misses):
            resolve_misses(self.field, misses, values)
        return values

    def _sample_kernel(self, pos, distances, ks):
        from .render import kernels

        cache = self.cache
        n = pos.shape[0]
        if distances is None:
            distances = np.linalg.norm(pos - self.camera_pos, axis=1)
        mode = {"corrected": 0, "as_printed": 1, "off": 2}[self.policy.mode]
        u = self.rng.uniform(n) if mode != 2 else np.zeros(n)
        table_flat, offsets, grids, pool_flat, last_used = ks
        values = np.empty(n, dtype=np.float32)
        served = np.empty(n, dtype=np.int8)
        req = np.empty(n, dtype=np.int8)
        vx, vy, vz = cache.layout.dims
        exact, fallback, miss = kernels.probe_pass(
            pos,
            np.ascontiguousarray(distances, dtype=np.float64),
            u,
            self._scale,
            mode,
            float(vx),
            float(vy),
            float(vz),
            cache.max_lod,
            cache.config.brick_size,
            table_flat,
            offsets,
            grids,
            pool_flat,
            last_used,
            cache.frame,
            values,
            served,
            req,
        )
        stats = cache.stats
        stats.requests += n
        stats.exact_hits += int(exact)
        stats.fallback_hits += int(fallback)
        stats.true_misses += int(miss)
        self.frame_requests += n
        self.frame_true_misses += int(miss)
        self.frame_fallback_hits = stats.fallback_hits
        if fallback or miss:
            rows = np.flatnonzero(served != req)
            native = world_to_native(pos[rows], cache.layout.dims)
            np.clip(native, 0.0, np.asarray(cache.layout.dims, dtype=np.float64) - 1.0, out=native)
            cache.record_miss_batch(native, req[rows].astype(np.int64))
        if miss:
            miss_rows = np.flatnonzero(served < 0)
            values[miss_rows] = 0.0
            resolve_misses(self.field, MissList(clamp_normalized(pos[miss_rows]), miss_rows), values)
        return values


def _point_to_unit_box(p: np.ndarray) -> float:
    gap = np.maximum(np.maximum(-p, p - 1.0), 0.0)
    return float(np.linalg.norm(gap))
