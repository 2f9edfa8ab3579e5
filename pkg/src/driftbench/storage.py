"""Trace-driven paged storage simulation.

Objects live on fixed-size disk pages.  Sequential initial placement packs
them in ascending oid order; a buffer of ``buffer_pages`` frames absorbs
repeated page accesses under LRU or CLOCK replacement.  The headline metric
is total I/O: transaction reads plus clustering reads plus clustering
writes.  Transaction writes dirty pages but are not part of the metric
(an optional config switch records evicted dirty pages separately).
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from .database import Database, object_size
from .errors import ParameterError, PlacementError, TraceError
from .workload import AccessRecord, OpKind

LRU = "lru"
CLOCK = "clock"


@dataclass
class SimConfig:
    page_size: int = 4096
    buffer_pages: int = 1024
    replacement: str = LRU
    multiprogramming: int = 1
    placement: str = "sequential"
    count_dirty_evictions: bool = False

    def validate(self) -> None:
        if self.page_size < 1 or self.buffer_pages < 1:
            raise ParameterError("page_size and buffer_pages must be >= 1")
        if self.replacement not in (LRU, CLOCK):
            raise ParameterError(f"unknown replacement policy {self.replacement!r}")
        if self.multiprogramming != 1:
            raise ParameterError("only multiprogramming level 1 is supported")
        if self.placement != "sequential":
            raise ParameterError(f"unknown placement {self.placement!r}")


@dataclass
class SimMetrics:
    txn_read_io: int = 0
    clust_read_io: int = 0
    clust_write_io: int = 0
    buffer_hits: int = 0
    dirty_evictions: int = 0

    @property
    def total_io(self) -> int:
        return self.txn_read_io + self.clust_read_io + self.clust_write_io


class PageMap:
    """Assignment of objects to pages, byte-granular within a page."""

    def __init__(self, page_size: int, default_object_size: int = 256):
        self.page_size = page_size
        self.default_object_size = default_object_size
        self.page_of: dict[int, int] = {}
        self.pages: dict[int, list[int]] = {}
        self.fill: dict[int, int] = {}
        self.sizes: dict[int, int] = {}
        self._next_page = 0

    def new_page(self) -> int:
        pid = self._next_page
        self._next_page += 1
        self.pages[pid] = []
        self.fill[pid] = 0
        return pid

    def place(self, oid: int, size: int, pid: int) -> None:
        if size > self.page_size:
            raise PlacementError(
                f"object {oid} ({size} B) exceeds page size {self.page_size}")
        if oid in self.page_of:
            self.remove(oid)
        self.pages[pid].append(oid)
        self.fill[pid] += size
        self.page_of[oid] = pid
        self.sizes[oid] = size

    def remove(self, oid: int) -> None:
        pid = self.page_of.pop(oid)
        self.pages[pid].remove(oid)
        self.fill[pid] -= self.sizes[oid]
        if not self.pages[pid]:
            del self.pages[pid]
            del self.fill[pid]

    def fits(self, pid: int, size: int) -> bool:
        return self.fill.get(pid, 0) + size <= self.page_size

    def page_count(self) -> int:
        return len(self.pages)


def place_sequential(db: Database, cfg: SimConfig) -> PageMap:
    """Pack objects into pages in ascending oid order, next-fit by size."""
    cfg.validate()
    sizes = {oid: object_size(db.objects[oid]) for oid in db.objects}
    mean = max(1, round(sum(sizes.values()) / len(sizes))) if sizes else 256
    pm = PageMap(cfg.page_size, default_object_size=mean)
    pid = pm.new_page()
    for oid in sorted(db.objects):
        size = sizes[oid]
        if not pm.fits(pid, size):
            pid = pm.new_page()
        pm.place(oid, size, pid)
    return pm


class LRUBuffer:
    """Classic LRU over page ids (LRU-K with K = 1)."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._frames: OrderedDict[int, None] = OrderedDict()
        self.dirty: set[int] = set()
        self.dirty_evictions = 0

    @property
    def resident(self):
        return self._frames.keys()

    def probe(self, pid: int) -> tuple[bool, int | None]:
        """Touch a page.  Returns (hit, evicted page id or None)."""
        if pid in self._frames:
            self._frames.move_to_end(pid)
            return True, None
        evicted = None
        if len(self._frames) >= self.capacity:
            evicted, _ = self._frames.popitem(last=False)
            if evicted in self.dirty:
                self.dirty.discard(evicted)
                self.dirty_evictions += 1
        self._frames[pid] = None
        return False, evicted

    def mark_dirty(self, pid: int) -> None:
        if pid in self._frames:
            self.dirty.add(pid)


class ClockBuffer:
    """Second-chance (CLOCK) replacement."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._slots: list[int | None] = [None] * capacity
        self._ref: list[bool] = [False] * capacity
        self._index: dict[int, int] = {}
        self._hand = 0
        self.dirty: set[int] = set()
        self.dirty_evictions = 0

    @property
    def resident(self):
        return self._index.keys()

    def probe(self, pid: int) -> tuple[bool, int | None]:
        slot = self._index.get(pid)
        if slot is not None:
            self._ref[slot] = True
            return True, None
        evicted = None
        while True:
            cur = self._slots[self._hand]
            if cur is None:
                break
            if self._ref[self._hand]:
                self._ref[self._hand] = False
                self._hand = (self._hand + 1) % self.capacity
                continue
            evicted = cur
            del self._index[cur]
            if cur in self.dirty:
                self.dirty.discard(cur)
                self.dirty_evictions += 1
            break
        self._slots[self._hand] = pid
        self._ref[self._hand] = True
        self._index[pid] = self._hand
        self._hand = (self._hand + 1) % self.capacity
        return False, evicted

    def mark_dirty(self, pid: int) -> None:
        if pid in self._index:
            self.dirty.add(pid)


def make_buffer(cfg: SimConfig):
    return LRUBuffer(cfg.buffer_pages) if cfg.replacement == LRU \
        else ClockBuffer(cfg.buffer_pages)


def run_trace(trace: list[AccessRecord], pagemap: PageMap, cfg: SimConfig,
              clusterer=None) -> SimMetrics:
    """Replay a trace through the buffer, letting the clusterer reorganize.

    Each access resolves the object's current page and probes the buffer; a
    miss costs one transaction read.  After every record the clusterer
    observes it and may re-cluster, paying clustering read/write I/O and
    mutating the page map.
    """
    cfg.validate()
    buf = make_buffer(cfg)
    metrics = SimMetrics()
    page_of = pagemap.page_of
    for rec in trace:
        for oid, mode in rec.accessed:
            pid = page_of.get(oid)
            if pid is None:
                if rec.op_kind == OpKind.DATABASE_EVOLUTION:
                    pid = _append_object(pagemap, oid)
                else:
                    raise TraceError(f"oid {oid} not present in the page map")
            hit, _ = buf.probe(pid)
            if hit:
                metrics.buffer_hits += 1
            else:
                metrics.txn_read_io += 1
            if mode == "w":
                buf.mark_dirty(pid)
        if clusterer is not None:
            clusterer.observe(rec, pagemap)
            creads, cwrites = clusterer.maybe_recluster(pagemap, buf)
            metrics.clust_read_io += creads
            metrics.clust_write_io += cwrites
    if cfg.count_dirty_evictions:
        metrics.dirty_evictions = buf.dirty_evictions
    return metrics


def _append_object(pagemap: PageMap, oid: int) -> int:
    size = pagemap.default_object_size
    pid = max(pagemap.pages) if pagemap.pages else pagemap.new_page()
    if not pagemap.fits(pid, size):
        pid = pagemap.new_page()
    pagemap.place(oid, size, pid)
    return pid
