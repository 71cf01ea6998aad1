"""Residency tables mapping brick linear indices to pool slots.

Small LoD grids keep a dense array resident. Grids past the
virtualization threshold use a two-level scheme: a directory of
fixed-size pages, where pages are materialized on demand and cached
under their own LRU budget. A page with no mapped entries carries no
information (everything in it is unmapped), so evicting one is free;
pages holding mapped entries are pinned.
"""

from __future__ import annotations

import numpy as np

UNMAPPED = -1


class DirectTable:
    """Fully resident table: one int32 slot id (or UNMAPPED) per brick."""

    def __init__(self, entry_count: int):
        self.entries = np.full(entry_count, UNMAPPED, dtype=np.int32)

    def get_many(self, linear: np.ndarray) -> np.ndarray:
        return self.entries[linear]

    def set(self, linear: int, slot: int):
        self.entries[linear] = slot

    def clear(self, linear: int):
        self.entries[linear] = UNMAPPED

    def reset(self):
        self.entries.fill(UNMAPPED)

    @property
    def resident_pages(self) -> int:
        return 1


class PagedTable:
    """Directory of demand-allocated pages with an LRU budget on clean pages."""

    def __init__(self, entry_count: int, page_size: int = 4096, page_budget: int = 64):
        self.entry_count = entry_count
        self.page_size = int(page_size)
        self.page_budget = max(1, int(page_budget))
        self._pages: dict[int, np.ndarray] = {}
        self._mapped_count: dict[int, int] = {}
        self._stamp: dict[int, int] = {}
        self._clock = 0

    def _touch(self, page_id: int):
        self._clock += 1
        self._stamp[page_id] = self._clock

    def _ensure_page(self, page_id: int) -> np.ndarray:
        page = self._pages.get(page_id)
        if page is None:
            if len(self._pages) >= self.page_budget:
                self._evict_one()
            page = np.full(self.page_size, UNMAPPED, dtype=np.int32)
            self._pages[page_id] = page
            self._mapped_count[page_id] = 0
        self._touch(page_id)
        return page

    def _evict_one(self):
        # only clean pages are evictable; pinned pages can exceed the budget
        victims = [p for p, c in self._mapped_count.items() if c == 0]
        if not victims:
            return
        victim = min(victims, key=lambda p: self._stamp[p])
        del self._pages[victim]
        del self._mapped_count[victim]
        del self._stamp[victim]

    def get_many(self, linear: np.ndarray) -> np.ndarray:
        out = np.full(linear.shape, UNMAPPED, dtype=np.int32)
        page_ids = linear // self.page_size
        for page_id in np.unique(page_ids):
            page = self._pages.get(int(page_id))
            if page is None:
                continue
            self._touch(int(page_id))
            sel = page_ids == page_id
            out[sel] = page[linear[sel] - page_id * self.page_size]
        return out

    def set(self, linear: int, slot: int):
        page_id = linear // self.page_size
        page = self._ensure_page(page_id)
        offset = linear - page_id * self.page_size
        if page[offset] == UNMAPPED:
            self._mapped_count[page_id] += 1
        page[offset] = slot

    def clear(self, linear: int):
        page_id = linear // self.page_size
        page = self._pages.get(page_id)
        if page is None:
            return
        offset = linear - page_id * self.page_size
        if page[offset] != UNMAPPED:
            self._mapped_count[page_id] -= 1
        page[offset] = UNMAPPED

    def reset(self):
        self._pages.clear()
        self._mapped_count.clear()
        self._stamp.clear()
        self._clock = 0

    @property
    def resident_pages(self) -> int:
        return len(self._pages)


def make_table(entry_count: int, direct_threshold: int, page_size: int, page_budget: int):
    if entry_count <= direct_threshold:
        return DirectTable(entry_count)
    return PagedTable(entry_count, page_size=page_size, page_budget=page_budget)
