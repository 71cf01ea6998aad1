"""Fixed-capacity brick pool with per-slot LRU stamps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brickmath import BrickKey

NO_OWNER = -1


@dataclass(frozen=True)
class PoolSpec:
    """Size accounting for a brick pool, available without allocating it."""

    pool_dims: tuple[int, int, int]
    brick_size: int

    @property
    def slot_count(self) -> int:
        px, py, pz = self.pool_dims
        return px * py * pz

    @property
    def voxel_count(self) -> int:
        return self.slot_count * self.brick_size**3

    @property
    def byte_size(self) -> int:
        # full-precision f32 storage
        return self.voxel_count * 4


class BrickPool:
    """Slab of slots, each holding one brick's B^3 samples plus LRU bookkeeping."""

    def __init__(self, pool_dims, brick_size: int):
        self.spec = PoolSpec(tuple(int(d) for d in pool_dims), int(brick_size))
        n = self.spec.slot_count
        b = self.spec.brick_size
        self.data = np.zeros((n, b, b, b), dtype=np.float32)  # [slot, z, y, x]
        self.owner: list[BrickKey | None] = [None] * n
        self.last_used = np.full(n, -1, dtype=np.int64)
        self._free = list(range(n - 1, -1, -1))

    @property
    def slot_count(self) -> int:
        return self.spec.slot_count

    def occupancy(self) -> float:
        return 1.0 - len(self._free) / self.spec.slot_count

    def acquire_slot(self, frame: int) -> int | None:
        """A free slot, else the LRU slot not touched this frame; None if all are current."""
        if self._free:
            return self._free.pop()
        candidates = np.flatnonzero(self.last_used < frame)
        if candidates.size == 0:
            return None
        return int(candidates[np.argmin(self.last_used[candidates])])

    def store(self, slot: int, key: BrickKey, samples: np.ndarray, frame: int):
        b = self.spec.brick_size
        self.data[slot] = samples.reshape(b, b, b)
        self.owner[slot] = key
        self.last_used[slot] = frame

    def release(self, slot: int):
        self.owner[slot] = None
        self.last_used[slot] = -1
        self._free.append(slot)

    def touch(self, slots: np.ndarray, frame: int):
        # concurrent lookups all write the same frame id, so lost updates
        # between readers of one frame are harmless
        self.last_used[slots] = frame
