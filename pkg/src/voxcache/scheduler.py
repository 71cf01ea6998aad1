"""Asynchronous brick loading: miss ranking, top-n batch selection, field inference.

A missing brick's rank starts at the frame it was first reported and
grows by one per subsequent request, clamped to first-frame + 1000, so
heavily sampled bricks win without starving bricks discovered later.
With ranking disabled the table degrades to the first-missed-frame
order with brick-layout order as the tie break, which loads bricks
closer to the volume origin first.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass

import numpy as np

from .cache.brickmath import BrickKey, BrickLayout
from .errors import VoxcacheError

RANK_CLAMP = 1000
DEFAULT_MAX_REQUESTS = 40


@dataclass
class RequestEntry:
    key: BrickKey
    base: int
    hits: int = 0

    def rank(self, clamp: int = RANK_CLAMP) -> int:
        return min(self.base + self.hits, self.base + clamp)


@dataclass(frozen=True)
class SchedulerConfig:
    max_requests: int = DEFAULT_MAX_REQUESTS
    ranking_enabled: bool = True
    rank_clamp: int = RANK_CLAMP


class RequestTable:
    """Pending brick requests with their ranks."""

    def __init__(self, layout: BrickLayout, config: SchedulerConfig = SchedulerConfig()):
        self.layout = layout
        self.config = config
        self._entries: dict[BrickKey, RequestEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: BrickKey) -> bool:
        return key in self._entries

    def entry(self, key: BrickKey) -> RequestEntry | None:
        return self._entries.get(key)

    def report_miss(self, key: BrickKey, frame: int, count: int = 1) -> RequestEntry:
        """First report pins the base frame; later reports bump the hit count."""
        entry = self._entries.get(key)
        if entry is None:
            entry = RequestEntry(key, base=frame, hits=count - 1)
            self._entries[key] = entry
        else:
            entry.hits += count
        return entry

    def report_many(self, counts: dict[BrickKey, int], frame: int):
        for key, count in counts.items():
            self.report_miss(key, frame, count)

    def reinsert(self, keys, frame: int):
        """Failed-batch keys come back with a fresh base so they cannot starve."""
        for key in keys:
            self._entries[key] = RequestEntry(key, base=frame, hits=0)

    def select_batch(self, n: int, exclude=None) -> list[BrickKey]:
        """Pop the n best entries; mapped/in-flight keys are dropped, not returned."""
        if n < 1:
            raise ValueError("batch size must be >= 1")
        exclude = exclude or (lambda key: False)
        clamp = self.config.rank_clamp

        def tie(key: BrickKey):
            return (key.linear_index(self.layout.grids[key.lod]), key.lod)

        if self.config.ranking_enabled:
            order = sorted(self._entries.values(), key=lambda e: (-e.rank(clamp), *tie(e.key)))
        else:
            order = sorted(self._entries.values(), key=lambda e: (e.base, *tie(e.key)))
        picked = []
        for entry in order:
            if len(picked) == n:
                break
            del self._entries[entry.key]
            if exclude(entry.key):
                continue
            picked.append(entry.key)
        return picked


def generate_brick_coords(key: BrickKey, layout: BrickLayout):
    """All B^3 sample coordinates of a brick, native and normalized, x-fastest.

    Stride is 2^L; the origin shifts by one voxel past brick zero so
    neighboring bricks share a boundary sample.
    """
    if not layout.valid_key(key):
        raise ValueError(f"{key} invalid for dims {layout.dims}")
    return layout.sample_positions(key)


@dataclass
class CompletedBrick:
    key: BrickKey
    samples: np.ndarray  # B^3 values, x-fastest


class FulfillmentError(VoxcacheError):
    def __init__(self, message, keys):
        super().__init__(message)
        self.keys = list(keys)


def fulfill(keys, layout: BrickLayout, field_src) -> list[CompletedBrick]:
    """Infer brick contents from the field, one sample batch per brick."""
    done = []
    for key in keys:
        _, normalized = generate_brick_coords(key, layout)
        values = field_src.sample_batch(normalized)
        done.append(CompletedBrick(key, np.asarray(values, dtype=np.float32)))
    return done


class InlineLoader:
    """Deterministic loader: fulfills one batch per pump, applied next frame."""

    def __init__(self, layout: BrickLayout, field_src, table: RequestTable):
        self.layout = layout
        self.field = field_src
        self.table = table
        self._staged: list[CompletedBrick] = []
        self.in_flight: set[BrickKey] = set()

    def collect(self) -> list[CompletedBrick]:
        done, self._staged = self._staged, []
        self.in_flight.clear()
        return done

    def dispatch(self, frame: int, is_mapped) -> int:
        if self.in_flight:
            return 0
        keys = self.table.select_batch(
            self.table.config.max_requests,
            exclude=lambda k: is_mapped(k) or k in self.in_flight,
        )
        if not keys:
            return 0
        self.in_flight = set(keys)
        try:
            self._staged.extend(fulfill(keys, self.layout, self.field))
        except VoxcacheError:
            self.table.reinsert(keys, frame)
            self.in_flight.clear()
            self._staged = []
            return 0
        return len(keys)

    def shutdown(self):
        pass


class ThreadLoader:
    """Background worker holding at most one batch in flight.

    Completed bricks become visible to the maintenance phase at the next
    frame boundary after the worker finishes; frames keep rendering
    while the field inference sleeps or computes.
    """

    def __init__(self, layout: BrickLayout, field_src, table: RequestTable):
        self.layout = layout
        self.field = field_src
        self.table = table
        self.in_flight: set[BrickKey] = set()
        self._work: queue.Queue = queue.Queue(maxsize=1)
        self._done: queue.Queue = queue.Queue()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def _run(self):
        while True:
            item = self._work.get()
            if item is None:
                return
            frame, keys = item
            try:
                bricks = fulfill(keys, self.layout, self.field)
                self._done.put(("ok", keys, bricks))
            except Exception:
                self._done.put(("failed", keys, frame))

    def collect(self) -> list[CompletedBrick]:
        done = []
        while True:
            try:
                status, keys, payload = self._done.get_nowait()
            except queue.Empty:
                break
            self.in_flight.difference_update(keys)
            if status == "ok":
                done.extend(payload)
            else:
                self.table.reinsert(keys, payload)
        return done

    def dispatch(self, frame: int, is_mapped) -> int:
        if self.in_flight:
            return 0
        keys = self.table.select_batch(
            self.table.config.max_requests,
            exclude=lambda k: is_mapped(k) or k in self.in_flight,
        )
        if not keys:
            return 0
        self.in_flight = set(keys)
        self._work.put((frame, keys))
        return len(keys)

    def shutdown(self):
        self._work.put(None)
        self._worker.join(timeout=5.0)


def make_loader(kind: str, layout: BrickLayout, field_src, table: RequestTable):
    if kind == "inline":
        return InlineLoader(layout, field_src, table)
    if kind == "thread":
        return ThreadLoader(layout, field_src, table)
    raise ValueError(f"unknown loader kind {kind!r}")
