"""Multi-level multi-resolution page table: brick residency, LoD fallback, LRU pool.

Lookups run concurrently within a frame and never mutate structure; all
inserts, evictions and the frame tick happen in a single maintenance
phase between frames. Miss reports accumulate in a buffer drained by
that maintenance phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brickmath import BrickKey, BrickLayout
from .pagetable import make_table
from .pool import BrickPool, PoolSpec


@dataclass(frozen=True)
class CacheConfig:
    brick_size: int = 40
    pool_dims: tuple[int, int, int] = (8, 8, 8)
    direct_table_threshold: int = 1 << 18
    page_size: int = 4096
    page_budget: int = 64

    def pool_spec(self) -> PoolSpec:
        return PoolSpec(tuple(self.pool_dims), self.brick_size)


@dataclass
class FrameStats:
    """Per-frame lookup accounting, reset by tick_frame."""

    requests: int = 0
    exact_hits: int = 0
    fallback_hits: int = 0
    true_misses: int = 0
    deferred_inserts: int = 0
    bricks_inserted: int = 0


@dataclass
class LookupResult:
    values: np.ndarray
    served_lod: np.ndarray  # -1 where no brick at any LoD covered the sample

    @property
    def miss_mask(self) -> np.ndarray:
        return self.served_lod < 0


class Mrpd:
    def __init__(self, dims, config: CacheConfig = CacheConfig()):
        self.config = config
        self.layout = BrickLayout(dims, config.brick_size)
        self.pool = BrickPool(config.pool_dims, config.brick_size)
        self.tables = [
            make_table(
                self.layout.brick_count(lod),
                config.direct_table_threshold,
                config.page_size,
                config.page_budget,
            )
            for lod in range(self.layout.max_lod + 1)
        ]
        self.frame = 0
        self.stats = FrameStats()
        self._miss_counts: dict[BrickKey, int] = {}
        self._loaded_total = 0
        self._kernel_state = None
        self._tables_dirty = True

    # -- queries ---------------------------------------------------------

    @property
    def max_lod(self) -> int:
        return self.layout.max_lod

    def occupancy(self) -> float:
        return self.pool.occupancy()

    def bricks_loaded_total(self) -> int:
        return self._loaded_total

    def is_mapped(self, key: BrickKey) -> bool:
        linear = np.asarray([key.linear_index(self.layout.grids[key.lod])])
        return int(self.tables[key.lod].get_many(linear)[0]) >= 0

    def kernel_state(self):
        """Packed dense residency arrays for the compiled probe kernel.

        Available only while every LoD table is directly resident;
        virtualized tables fall back to the python lookup path.
        """
        from .pagetable import DirectTable

        if not all(isinstance(t, DirectTable) for t in self.tables):
            return None
        if self._tables_dirty or self._kernel_state is None:
            offsets = np.zeros(len(self.tables), dtype=np.int64)
            total = 0
            for lod, table in enumerate(self.tables):
                offsets[lod] = total
                total += table.entries.shape[0]
            flat = np.empty(total, dtype=np.int32)
            for lod, table in enumerate(self.tables):
                flat[offsets[lod] : offsets[lod] + table.entries.shape[0]] = table.entries
            grids = np.asarray(self.layout.grids, dtype=np.int64)
            self._kernel_state = (flat, offsets, grids)
            self._tables_dirty = False
        flat, offsets, grids = self._kernel_state
        return flat, offsets, grids, self.pool.data.reshape(-1), self.pool.last_used

    def note_lookup_results(self, requested: np.ndarray, served: np.ndarray):
        """Fold a kernel-path batch into the frame statistics."""
        n = requested.shape[0]
        exact = served == requested
        miss = served < 0
        self.stats.requests += n
        self.stats.exact_hits += int(exact.sum())
        self.stats.true_misses += int(miss.sum())
        self.stats.fallback_hits += int(n - exact.sum() - miss.sum())

    def record_miss_batch(self, native_positions: np.ndarray, requested_lods: np.ndarray):
        """File miss reports for fallback-served and missed samples (kernel path)."""
        if native_positions.shape[0] == 0:
            return
        self._record_misses(native_positions, requested_lods, np.ones(native_positions.shape[0], dtype=bool))

    def lookup(self, positions: np.ndarray, requested_lods, record_misses: bool = True) -> LookupResult:
        """Resolve native-coordinate samples against the cache with LoD fallback.

        Each sample tries its requested LoD, then successively coarser
        levels. A sample served by fallback (or not at all) files a miss
        report for the brick at its requested LoD.
        """
        pos = np.asarray(positions, dtype=np.float64)
        n = pos.shape[0]
        req = np.broadcast_to(np.asarray(requested_lods, dtype=np.int64), (n,)).copy()
        np.clip(req, 0, self.max_lod, out=req)
        np.clip(pos, 0.0, np.asarray(self.layout.dims, dtype=np.float64) - 1.0, out=pos)

        values = np.zeros(n, dtype=np.float32)
        served = np.full(n, -1, dtype=np.int64)
        remaining = np.ones(n, dtype=bool)

        for offset in range(self.max_lod + 1):
            if not remaining.any():
                break
            lvec = req + offset
            for lod in np.unique(lvec[remaining]):
                lod = int(lod)
                if lod > self.max_lod:
                    continue
                sel = np.flatnonzero(remaining & (lvec == lod))
                if sel.size == 0:
                    continue
                idx, local = self.layout.locate(pos[sel], lod)
                gx, gy, _ = self.layout.grids[lod]
                linear = idx[:, 0] + gx * (idx[:, 1] + gy * idx[:, 2])
                slots = self.tables[lod].get_many(linear)
                hit = slots >= 0
                if hit.any():
                    hit_rows = sel[hit]
                    hit_slots = slots[hit].astype(np.intp)
                    values[hit_rows] = self._interpolate(hit_slots, local[hit])
                    served[hit_rows] = lod
                    remaining[hit_rows] = False
                    self.pool.touch(hit_slots, self.frame)

        self.stats.requests += n
        exact = served == req
        self.stats.exact_hits += int(exact.sum())
        fallback = (served >= 0) & ~exact
        self.stats.fallback_hits += int(fallback.sum())
        miss = served < 0
        self.stats.true_misses += int(miss.sum())

        if record_misses:
            self._record_misses(pos, req, fallback | miss)
        return LookupResult(values, served)

    def _interpolate(self, slots: np.ndarray, local: np.ndarray) -> np.ndarray:
        """Trilinear fetch inside each serving brick via flat gathers.

        Corner +1 offsets may step past a brick edge only where the
        matching weight is exactly zero, so clipped flat reads are safe.
        """
        b = self.config.brick_size
        flat = self.pool.data.reshape(-1)
        c0 = np.floor(local)
        f = (local - c0).astype(np.float32)
        ix = c0.astype(np.int64)
        base = ((slots.astype(np.int64) * b + ix[:, 2]) * b + ix[:, 1]) * b + ix[:, 0]
        sx, sy, sz = 1, b, b * b
        fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
        gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
        hi = flat.size - 1
        c000 = flat[base]
        c100 = flat[np.minimum(base + sx, hi)]
        c010 = flat[np.minimum(base + sy, hi)]
        c110 = flat[np.minimum(base + sy + sx, hi)]
        c001 = flat[np.minimum(base + sz, hi)]
        c101 = flat[np.minimum(base + sz + sx, hi)]
        c011 = flat[np.minimum(base + sz + sy, hi)]
        c111 = flat[np.minimum(base + sz + sy + sx, hi)]
        c00 = c000 * gx + c100 * fx
        c10 = c010 * gx + c110 * fx
        c01 = c001 * gx + c101 * fx
        c11 = c011 * gx + c111 * fx
        return (c00 * gy + c10 * fy) * gz + (c01 * gy + c11 * fy) * fz

    def _record_misses(self, pos, req, needs_report):
        rows = np.flatnonzero(needs_report)
        if rows.size == 0:
            return
        for lod in np.unique(req[rows]):
            sel = rows[req[rows] == lod]
            idx, _ = self.layout.locate(pos[sel], int(lod))
            uniq, counts = np.unique(idx, axis=0, return_counts=True)
            for (i, j, k), c in zip(uniq, counts):
                key = BrickKey(int(lod), (int(i), int(j), int(k)))
                self._miss_counts[key] = self._miss_counts.get(key, 0) + int(c)

    # -- maintenance (between frames, single writer) -----------------------

    def insert(self, key: BrickKey, samples: np.ndarray, frame: int | None = None) -> int | None:
        """Map a completed brick, evicting the LRU slot if needed.

        Returns the slot id, or None when every slot was touched this
        frame and the insert must be retried next frame.
        """
        if samples.size != self.config.brick_size**3:
            raise ValueError(f"expected {self.config.brick_size ** 3} samples, got {samples.size}")
        frame = self.frame if frame is None else frame
        grid = self.layout.grids[key.lod]
        linear = key.linear_index(grid)
        existing = int(self.tables[key.lod].get_many(np.asarray([linear]))[0])
        if existing >= 0:
            self.pool.store(existing, key, samples, frame)
            return existing
        slot = self.pool.acquire_slot(frame)
        if slot is None:
            self.stats.deferred_inserts += 1
            return None
        old = self.pool.owner[slot]
        if old is not None:
            self.tables[old.lod].clear(old.linear_index(self.layout.grids[old.lod]))
        self.pool.store(slot, key, samples, frame)
        self.tables[key.lod].set(linear, slot)
        self.stats.bricks_inserted += 1
        self._loaded_total += 1
        self._tables_dirty = True
        return slot

    def tick_frame(self) -> int:
        self.frame += 1
        self.stats = FrameStats()
        return self.frame

    def drain_miss_reports(self) -> dict[BrickKey, int]:
        reports = self._miss_counts
        self._miss_counts = {}
        return reports

    def reset(self):
        """Drop all residency state; the preload schedule restarts from scratch."""
        for table in self.tables:
            table.reset()
        self.pool = BrickPool(self.config.pool_dims, self.config.brick_size)
        self._miss_counts = {}
        self.stats = FrameStats()
        self._loaded_total = 0
        self._tables_dirty = True

    def mapped_keys(self):
        return [key for key in self.pool.owner if key is not None]
