"""Dynamic clustering policies.

These are characteristic-level policies: they reproduce the behaviors that
separate the algorithm families rather than the original algorithms bit for
bit.  What matters here:

* ``dro`` is flexible-conservative: per round it re-clusters at most MaxD
  pages (and at most MaxDR of all pages), using only object frequency and
  page usage statistics.
* ``gp`` / ``prp`` are opportunistic: candidates are restricted to in-buffer
  pages (so clustering read I/O is zero by construction), re-clustering is
  prioritized to the NRI worst pages, and writes of already-dirty pages are
  free.
* ``dstc`` is non-conservative: every page showing any re-clustering benefit
  is reorganized, however slight, with no per-round bound.  It keeps
  object-transition statistics, which the conservative policies do not need.

Re-clustering moves the chosen hot objects onto freshly allocated pages,
packed in co-access / frequency order; objects that do not fit the page
budget stay where they are, so the object population is always conserved.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

from .errors import ParameterError
from .storage import PageMap
from .workload import AccessRecord, OpKind


@dataclass
class ClustererConfig:
    kind: str = "none"
    # dstc knobs: n is the per-cluster object cap, n_p the minimum pages per
    # analysis, p the trigger period in transactions, t_fa/t_fe/t_fc the
    # page-activity, object-frequency and usage-ceiling thresholds, and w the
    # transition-weight decay carried between analysis windows.
    n: int = 200
    n_p: int = 1
    p: int = 1000
    t_fa: float = 1.0
    t_fe: float = 1.0
    t_fc: float = 1.0
    w: float = 0.3
    # dro
    min_ur: float = 0.001
    min_lt: int = 2
    pc_rate: float = 0.02
    max_d: int = 1
    max_dr: float = 0.2
    max_rr: float = 0.95
    su_ind: bool = True
    # opcf (shared by gp and prp)
    opcf_n: int = 200
    cbt: float = 0.1
    npa: int = 50
    nri: int = 25

    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown clusterer kind {self.kind!r}")
        for name, value in (("p", self.p), ("min_lt", self.min_lt),
                            ("npa", self.npa), ("nri", self.nri),
                            ("max_d", self.max_d), ("n", self.n)):
            if value < 1:
                raise ParameterError(f"{name} must be >= 1")
        for name, value in (("pc_rate", self.pc_rate), ("max_dr", self.max_dr)):
            if not (0.0 < value <= 1.0):
                raise ParameterError(f"{name} must be in (0, 1]")


class UsageStats:
    """Per-window access statistics.

    Always: object frequency, page access counts, per-page touched-object
    sets.  Optionally: per-record access groups (for co-access packing) and
    consecutive-access transition weights (dstc, gp).
    """

    def __init__(self, track_groups: bool = False,
                 track_transitions: bool = False):
        self.track_groups = track_groups
        self.track_transitions = track_transitions
        self.reset()

    def reset(self) -> None:
        self.obj_freq: Counter = Counter()
        self.page_accesses: Counter = Counter()
        self.page_touched: dict[int, set[int]] = defaultdict(set)
        self.groups: list[list[int]] = []
        self.transitions: dict[tuple[int, int], float] = {}

    def decay(self, w: float, carry_freq: bool = False) -> None:
        """Carry transition weights (and optionally object frequencies) into
        the next window, decayed by w.  Page statistics always restart."""
        carried = {k: v * w for k, v in self.transitions.items() if v * w > 1e-6}
        freq = None
        if carry_freq:
            freq = Counter({k: v * w for k, v in self.obj_freq.items()
                            if v * w > 1e-6})
        self.reset()
        self.transitions = carried
        if freq is not None:
            self.obj_freq = freq

    def observe(self, rec: AccessRecord, pagemap: PageMap) -> None:
        page_of = pagemap.page_of
        prev = None
        group = []
        for oid, _mode in rec.accessed:
            self.obj_freq[oid] += 1
            pid = page_of.get(oid)
            if pid is not None:
                self.page_accesses[pid] += 1
                self.page_touched[pid].add(oid)
            if self.track_groups:
                group.append(oid)
            if self.track_transitions and prev is not None:
                key = (prev, oid)
                self.transitions[key] = self.transitions.get(key, 0.0) + 1.0
            prev = oid
        if self.track_groups and group:
            self.groups.append(group)

    def usage_rate(self, pid: int, pagemap: PageMap) -> float:
        residents = pagemap.pages.get(pid)
        if not residents:
            return 0.0
        touched = self.page_touched.get(pid)
        if not touched:
            return 0.0
        live = sum(1 for o in touched if pagemap.page_of.get(o) == pid)
        return min(1.0, live / len(residents))

    def badness(self, pid: int, pagemap: PageMap) -> float:
        """(1 - usage rate) * access count: busy pages whose residents are
        mostly unused rank worst."""
        return (1.0 - self.usage_rate(pid, pagemap)) * self.page_accesses[pid]


class Clusterer:
    """Base: observes records and re-clusters every ``period`` transactions."""

    kind = "none"
    period = 1

    def __init__(self, cfg: ClustererConfig):
        cfg.validate()
        self.cfg = cfg
        self.txns = 0
        self.rounds = 0
        self.stats = UsageStats()
        self.page_created_round: dict[int, int] = {}
        self.last_round_pages_touched = 0

    def observe(self, rec: AccessRecord, pagemap: PageMap) -> None:
        self.txns += 1
        self.stats.observe(rec, pagemap)

    def maybe_recluster(self, pagemap: PageMap, buf) -> tuple[int, int]:
        if self.txns == 0 or self.txns % self.period != 0:
            return 0, 0
        self.rounds += 1
        result = self._recluster(pagemap, buf)
        self.stats.reset()
        return result

    def _recluster(self, pagemap, buf) -> tuple[int, int]:  # pragma: no cover
        raise NotImplementedError

    # -- shared helpers ----------------------------------------------------

    def _accessed_pages(self, pagemap: PageMap) -> list[int]:
        return [pid for pid in self.stats.page_accesses if pid in pagemap.pages]

    def _pack_into_fresh(self, pagemap: PageMap, ordered: list[int],
                         max_pages: int) -> list[int]:
        """Move objects onto up to max_pages new pages, next-fit in order.
        Objects beyond the byte budget stay on their current pages."""
        fresh: list[int] = []
        pid = None
        seen = set()
        for oid in ordered:
            if oid in seen or oid not in pagemap.page_of:
                continue
            seen.add(oid)
            size = pagemap.sizes[oid]
            if pid is None or not pagemap.fits(pid, size):
                if len(fresh) >= max_pages:
                    break
                pid = pagemap.new_page()
                fresh.append(pid)
                self.page_created_round[pid] = self.rounds
            pagemap.place(oid, size, pid)
        return fresh


class NoClusterer(Clusterer):
    kind = "none"

    def observe(self, rec, pagemap):  # skip statistics entirely
        pass

    def maybe_recluster(self, pagemap, buf):
        return 0, 0


class DroClusterer(Clusterer):
    """Flexible conservative re-clustering from frequency + usage statistics."""

    kind = "dro"

    def __init__(self, cfg: ClustererConfig):
        super().__init__(cfg)
        self.period = max(1, round(1.0 / cfg.pc_rate))
        self.stats = UsageStats(track_groups=True)

    def observe(self, rec, pagemap):
        if not self.cfg.su_ind and rec.op_kind == OpKind.SEQUENTIAL_UPDATE:
            self.txns += 1
            return
        super().observe(rec, pagemap)

    def _recluster(self, pagemap, buf):
        cfg = self.cfg
        self.last_round_pages_touched = 0
        accessed = self._accessed_pages(pagemap)
        if not accessed:
            return 0, 0
        rates = {pid: self.stats.usage_rate(pid, pagemap) for pid in accessed}
        if sum(rates.values()) / len(rates) >= cfg.max_rr:
            return 0, 0  # already well clustered
        cap = max(1, min(cfg.max_d, int(cfg.max_dr * pagemap.page_count())))
        eligible = [
            pid for pid in accessed
            if cfg.min_ur <= rates[pid] < 1.0
            and self.rounds - self.page_created_round.get(pid, -cfg.min_lt) >= cfg.min_lt
        ]
        if not eligible:
            return 0, 0
        eligible.sort(key=lambda pid: (-self.stats.badness(pid, pagemap), pid))
        selected = eligible[:cap]
        self.last_round_pages_touched = len(selected)
        sel = set(selected)
        page_of = pagemap.page_of
        freq = self.stats.obj_freq
        groups = [g for g in self.stats.groups
                  if any(page_of.get(o) in sel for o in g)]
        groups.sort(key=lambda g: -sum(freq[o] for o in g))
        ordered = [o for g in groups for o in g]
        creads = sum(1 for pid in selected if pid not in buf.resident)
        fresh = self._pack_into_fresh(pagemap, ordered, len(selected))
        return creads, len(fresh)


class OpcfClusterer(Clusterer):
    """Shared opportunistic machinery; subclasses define the object order.

    Object frequencies and co-access transitions persist across rounds with
    decay, so stable access groups become visible even though each round only
    rewrites a handful of pages.  Page selection grows from the worst
    resident page through transition-related resident pages, which lets a
    round consolidate whole co-access groups instead of unrelated fragments.
    All candidates are buffer-resident, so clustering reads are zero.
    """

    def __init__(self, cfg: ClustererConfig):
        super().__init__(cfg)
        self.period = cfg.npa
        self.stats = UsageStats(track_transitions=True)
        self.first_seen: dict[int, int] = {}

    def observe(self, rec, pagemap):
        super().observe(rec, pagemap)
        for oid, _mode in rec.accessed:
            self.first_seen.setdefault(oid, self.txns)

    def maybe_recluster(self, pagemap, buf):
        if self.txns == 0 or self.txns % self.period != 0:
            return 0, 0
        self.rounds += 1
        result = self._recluster(pagemap, buf)
        self.stats.decay(self.cfg.w, carry_freq=True)
        return result

    def _recluster(self, pagemap, buf):
        cfg = self.cfg
        self.last_round_pages_touched = 0
        selected = self._select_pages(pagemap, buf.resident)
        if not selected:
            return 0, 0
        self.last_round_pages_touched = len(selected)
        freq = self.stats.obj_freq
        objects = [o for pid in selected for o in pagemap.pages[pid]]
        hot = [o for o in objects if freq[o] > 0]
        cold = [o for o in objects if freq[o] <= 0]
        ordered = self._order(hot) + cold
        n_dirty = sum(1 for pid in selected if pid in buf.dirty)
        for pid in selected:
            buf.dirty.discard(pid)  # the rewrite absorbs their pending write
        fresh = self._pack_into_fresh(pagemap, ordered, len(selected))
        cwrites = max(0, len(fresh) - n_dirty)
        return 0, cwrites

    def _select_pages(self, pagemap: PageMap, resident) -> list[int]:
        """Seed with the worst badness pages, then prefer resident pages
        whose objects are transition partners of the selection so far."""
        cfg = self.cfg
        seeds = [pid for pid in self._accessed_pages(pagemap)
                 if pid in resident
                 and self.stats.badness(pid, pagemap) >= cfg.cbt]
        if not seeds:
            return []
        seeds.sort(key=lambda pid: (-self.stats.badness(pid, pagemap), pid))
        adj = _object_adjacency(self.stats.transitions)
        page_of = pagemap.page_of
        selected: list[int] = []
        sel = set()
        related: dict[int, float] = {}

        def absorb(pid):
            selected.append(pid)
            sel.add(pid)
            related.pop(pid, None)
            for o in pagemap.pages[pid]:
                for partner, wt in adj.get(o, ()):
                    ppid = page_of.get(partner)
                    if ppid is not None and ppid in resident and ppid not in sel:
                        related[ppid] = related.get(ppid, 0.0) + wt

        seed_iter = iter(seeds)
        while len(selected) < cfg.nri:
            if related:
                absorb(max(related, key=lambda p: (related[p], -p)))
                continue
            nxt = next((p for p in seed_iter if p not in sel), None)
            if nxt is None:
                break
            absorb(nxt)
        return selected

    def _order(self, objects: list[int]) -> list[int]:  # pragma: no cover
        raise NotImplementedError


class PrpClusterer(OpcfClusterer):
    """Probability-ranking: order objects by descending access frequency,
    breaking ties by first-access time so simultaneously discovered objects
    stay adjacent."""

    kind = "prp"

    def _order(self, objects):
        freq = self.stats.obj_freq
        return sorted(objects,
                      key=lambda o: (-freq[o], self.first_seen.get(o, 0), o))


class GpClusterer(OpcfClusterer):
    """Greedy graph partitioning of the object transition graph."""

    kind = "gp"

    def _order(self, objects):
        return _greedy_partition_order(objects, self.stats.transitions,
                                       self.stats.obj_freq)


class DstcClusterer(Clusterer):
    """Non-conservative transition-based re-clustering.

    Any accessed page with at least t_fa accesses and a usage rate below
    t_fc is reorganized, no matter how small the expected gain, and there is
    no cap on the number of pages per round.  Objects with window frequency
    >= t_fe are regrouped along the transition graph.
    """

    kind = "dstc"

    def __init__(self, cfg: ClustererConfig):
        super().__init__(cfg)
        self.period = cfg.p
        self.stats = UsageStats(track_transitions=True)

    def maybe_recluster(self, pagemap, buf):
        if self.txns == 0 or self.txns % self.period != 0:
            return 0, 0
        self.rounds += 1
        result = self._recluster(pagemap, buf)
        self.stats.decay(self.cfg.w)
        return result

    def _recluster(self, pagemap, buf):
        cfg = self.cfg
        self.last_round_pages_touched = 0
        selected = [pid for pid in self._accessed_pages(pagemap)
                    if self.stats.page_accesses[pid] >= cfg.t_fa
                    and self.stats.usage_rate(pid, pagemap) < cfg.t_fc]
        if not selected:
            return 0, 0
        self.last_round_pages_touched = len(selected)
        sel = set(selected)
        freq = self.stats.obj_freq
        page_of = pagemap.page_of
        hot = [o for o, f in freq.items()
               if f >= cfg.t_fe and page_of.get(o) in sel]
        ordered = _greedy_partition_order(hot, self.stats.transitions, freq,
                                          max_cluster=cfg.n)
        creads = sum(1 for pid in selected if pid not in buf.resident)
        fresh = self._pack_into_fresh(pagemap, ordered, len(selected))
        return creads, len(fresh)


def _object_adjacency(transitions: dict[tuple[int, int], float]
                      ) -> dict[int, list[tuple[int, float]]]:
    adj: dict[int, list[tuple[int, float]]] = defaultdict(list)
    for (a, b), wt in transitions.items():
        if a != b:
            adj[a].append((b, wt))
            adj[b].append((a, wt))
    return adj


def _greedy_partition_order(objects: list[int],
                            transitions: dict[tuple[int, int], float],
                            freq: Counter,
                            max_cluster: int | None = None) -> list[int]:
    """Order objects so that strongly connected co-access clusters are
    contiguous.  Seeds are taken in descending frequency; each cluster grows
    by repeatedly absorbing the unassigned neighbor with the heaviest
    accumulated transition weight."""
    objs = set(objects)
    adj: dict[int, dict[int, float]] = defaultdict(dict)
    for (a, b), wt in transitions.items():
        if a in objs and b in objs and a != b:
            adj[a][b] = adj[a].get(b, 0.0) + wt
            adj[b][a] = adj[b].get(a, 0.0) + wt
    seeds = sorted(objs, key=lambda o: (-freq[o], o))
    unassigned = set(objs)
    out: list[int] = []
    for seed in seeds:
        if seed not in unassigned:
            continue
        unassigned.discard(seed)
        cluster = [seed]
        cand: dict[int, float] = {}
        for nbr, wt in adj.get(seed, {}).items():
            if nbr in unassigned:
                cand[nbr] = cand.get(nbr, 0.0) + wt
        while cand and (max_cluster is None or len(cluster) < max_cluster):
            best = max(cand, key=lambda o: (cand[o], freq[o], -o))
            del cand[best]
            if best not in unassigned:
                continue
            unassigned.discard(best)
            cluster.append(best)
            for nbr, wt in adj.get(best, {}).items():
                if nbr in unassigned:
                    cand[nbr] = cand.get(nbr, 0.0) + wt
        out.extend(cluster)
    return out


_KINDS = {
    "none": NoClusterer,
    "nc": NoClusterer,
    "dstc": DstcClusterer,
    "dstc_like": DstcClusterer,
    "dro": DroClusterer,
    "gp": GpClusterer,
    "opcf_gp": GpClusterer,
    "prp": PrpClusterer,
    "opcf_prp": PrpClusterer,
}


def canonical_kind(kind: str) -> str:
    return _KINDS[kind].kind if kind in _KINDS else kind


def make_clusterer(cfg: ClustererConfig) -> Clusterer:
    cfg.validate()
    return _KINDS[cfg.kind](cfg)
