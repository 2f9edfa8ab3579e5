"""Access-pattern change protocols.

Regional protocols (moving window, gradual moving window, cycles) drive
pattern change by periodically re-weighting H-regions.  Dependency protocols
chain successive workload roots (by reference, by traversed set, by class).
The hybrid setting alternates a randomization phase with bursts of
dependency selections, and integration replaces the dependency protocols'
uniform candidate pick with a regional protocol over the candidate set.

Every ``max(1, round(1/H))`` root selections counts as one change iteration.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .database import Database
from .errors import ConfigError, ParameterError
from .hregions import (DOWN, UP, HRegion, HRegionSet, adjust_weight,
                       equal_sizes, partition, select_root)
from .workload import AccessRecord, OpKind

MOVING_WINDOW = "moving_window"
GRADUAL_MOVING_WINDOW = "gradual_moving_window"
CYCLES = "cycles"


@dataclass
class RegionalConfig:
    protocol: str = MOVING_WINDOW
    h_rate: float = 1.0
    n_regions: int = 334
    cycle_region_size: float = 0.003
    highest_prob_w: float = 0.80
    lowest_prob_w: float = 0.0006
    prob_w_incr_size: float = 0.02
    assign_method: str = "random"


@dataclass
class DependencyConfig:
    random_dep_prob: float = 0.0
    sref_dep_prob: float = 0.0
    dref_dep_prob: float = 0.0
    traversed_dep_prob: float = 0.0
    class_dep_prob: float = 0.0
    d: int = 1        # D-references per object
    c: float = 1.0    # traversed-set fraction
    u: float = 1.0    # same-class subset fraction
    r: int = 0        # dependency selections per phase-2 burst

    def mix(self) -> list[float]:
        return [self.random_dep_prob, self.sref_dep_prob, self.dref_dep_prob,
                self.traversed_dep_prob, self.class_dep_prob]

    def validate(self) -> None:
        if self.r < 0:
            raise ParameterError("r must be >= 0")
        if self.r > 0 and abs(sum(self.mix()) - 1.0) > 1e-9:
            raise ParameterError(
                f"dependency mix must sum to 1, got {sum(self.mix())}")


@dataclass
class RegionalState:
    protocol: str
    cfg: RegionalConfig
    hrset: HRegionSet
    window: int = 0

    @property
    def weights(self) -> list[float]:
        return [r.prob_w for r in self.hrset.regions]


def change_interval(h_rate: float) -> int:
    """Root selections between change iterations: max(1, round(1/H))."""
    if not (0.0 < h_rate <= 1.0):
        raise ParameterError(f"h_rate must be in (0, 1], got {h_rate}")
    return max(1, round(1.0 / h_rate))


# ---------------------------------------------------------------------------
# Regional protocols

def moving_window_init(cfg: RegionalConfig, oids: list[int], seed: int = 0,
                       class_of: dict[int, int] | None = None) -> RegionalState:
    """N equal regions, one hot; the window starts at the hot region.

    Every region's increment is HIGHEST - LOWEST and all directions start
    down, so each change iteration swaps heat in a single step.
    """
    if cfg.n_regions < 1:
        raise ParameterError("n_regions must be >= 1")
    hrset = partition(oids, equal_sizes(cfg.n_regions), cfg.assign_method,
                      seed, class_of)
    for i, r in enumerate(hrset.regions):
        r.lowest_prob_w = cfg.lowest_prob_w
        r.highest_prob_w = cfg.highest_prob_w
        r.prob_w_incr_size = cfg.highest_prob_w - cfg.lowest_prob_w
        r.direction = DOWN
        r.prob_w = cfg.highest_prob_w if i == 0 else cfg.lowest_prob_w
    return RegionalState(protocol=MOVING_WINDOW, cfg=cfg, hrset=hrset)


def moving_window_step(state: RegionalState) -> RegionalState:
    regions = state.hrset.regions
    n = len(regions)
    old, new = state.window, (state.window + 1) % n
    regions[old].direction = DOWN
    regions[new].direction = UP
    for r in regions:
        adjust_weight(r)
    state.window = new
    return state


def gradual_moving_window_init(cfg: RegionalConfig, oids: list[int],
                               seed: int = 0,
                               class_of: dict[int, int] | None = None) -> RegionalState:
    """Like the moving window but with the user-chosen increment size."""
    state = moving_window_init(cfg, oids, seed, class_of)
    state.protocol = GRADUAL_MOVING_WINDOW
    for r in state.hrset.regions:
        r.prob_w_incr_size = cfg.prob_w_incr_size
    return state


def gradual_moving_window_step(state: RegionalState) -> RegionalState:
    """Toggle the direction of the region the window enters, then move every
    region one increment in its current direction.  Regions pinned at a bound
    with their direction still pointing outward simply hold."""
    regions = state.hrset.regions
    n = len(regions)
    new = (state.window + 1) % n
    regions[new].direction = UP if regions[new].direction == DOWN else DOWN
    for r in regions:
        adjust_weight(r)
    state.window = new
    return state


def cycles_init(cfg: RegionalConfig, oids: list[int], seed: int = 0,
                class_of: dict[int, int] | None = None) -> RegionalState:
    """Three regions: two equal-size extremes that trade heat, one static rest."""
    s = cfg.cycle_region_size
    if not (0.0 < s <= 0.5):
        raise ParameterError("cycle_region_size must be in (0, 0.5]")
    sizes = [s, s, 1.0 - 2.0 * s]
    hrset = partition(oids, sizes, cfg.assign_method, seed, class_of)
    swing = cfg.highest_prob_w - cfg.lowest_prob_w
    specs = [(cfg.highest_prob_w, DOWN, swing),
             (cfg.lowest_prob_w, UP, swing),
             (cfg.lowest_prob_w, DOWN, 0.0)]
    for r, (w, d, incr) in zip(hrset.regions, specs):
        r.lowest_prob_w = cfg.lowest_prob_w
        r.highest_prob_w = cfg.highest_prob_w
        r.prob_w = w
        r.direction = d
        r.prob_w_incr_size = incr
    return RegionalState(protocol=CYCLES, cfg=cfg, hrset=hrset)


def cycles_step(state: RegionalState) -> RegionalState:
    first, second = state.hrset.regions[0], state.hrset.regions[1]
    for r in (first, second):
        adjust_weight(r)
        r.direction = UP if r.direction == DOWN else DOWN
    return state


_INITS = {MOVING_WINDOW: moving_window_init,
          GRADUAL_MOVING_WINDOW: gradual_moving_window_init,
          CYCLES: cycles_init}
_STEPS = {MOVING_WINDOW: moving_window_step,
          GRADUAL_MOVING_WINDOW: gradual_moving_window_step,
          CYCLES: cycles_step}


def regional_init(cfg: RegionalConfig, oids: list[int], seed: int = 0,
                  class_of: dict[int, int] | None = None) -> RegionalState:
    try:
        return _INITS[cfg.protocol](cfg, oids, seed, class_of)
    except KeyError:
        raise ParameterError(f"unknown regional protocol {cfg.protocol!r}") from None


def regional_step(state: RegionalState) -> RegionalState:
    return _STEPS[state.protocol](state)


# ---------------------------------------------------------------------------
# Dependency protocols

def build_d_refs(db: Database, d: int, seed: int) -> dict[int, list[int]]:
    """Synthetic references used only to chain roots: d uniform targets each."""
    rng = random.Random(f"{seed}|drefs")
    oids = sorted(db.objects)
    return {oid: [oids[rng.randrange(len(oids))] for _ in range(d)]
            for oid in oids}


def candidates_by_reference(db: Database, prev: int, kind: str,
                            d_refs: dict[int, list[int]] | None) -> list[int]:
    if kind == "s_ref":
        return [t for t, _ in db.objects[prev].orefs]
    if kind == "d_ref":
        return list((d_refs or {}).get(prev, []))
    raise ParameterError(f"unknown reference kind {kind!r}")


def candidates_traversed(prev_trace: AccessRecord, c: float) -> list[int]:
    """Prefix of the previous traversal's visit order, ceil(c * n) long."""
    oids = [oid for oid, _ in prev_trace.accessed]
    if not oids:
        return []
    k = max(1, math.ceil(c * len(oids)))
    return oids[:k]


def candidates_same_class(db: Database, prev: int, u: float) -> list[int]:
    """Deterministic contiguous block of the class iterator, ceil(u * size)
    long, starting at a hash-derived offset.  The same previous root always
    yields the same block."""
    it = db.class_of(prev).iterator
    m = len(it)
    k = max(1, math.ceil(u * m))
    start = (prev * 2654435761) % (2 ** 32) % m
    return [it[(start + i) % m] for i in range(k)]


def dep_random(rng: random.Random, random_fn) -> int:
    return random_fn(rng)


def dep_by_reference(prev: int, kind: str, db: Database,
                     d_refs: dict[int, list[int]] | None,
                     rng: random.Random, random_fn=None) -> int:
    cands = candidates_by_reference(db, prev, kind, d_refs)
    if not cands:
        if random_fn is None:
            raise ParameterError("empty candidate set and no fallback")
        return random_fn(rng)
    return cands[rng.randrange(len(cands))]


def dep_traversed(prev_trace: AccessRecord, c: float, rng: random.Random) -> int:
    cands = candidates_traversed(prev_trace, c)
    return cands[rng.randrange(len(cands))]


def dep_same_class(prev: int, u: float, db: Database, rng: random.Random) -> int:
    cands = candidates_same_class(db, prev, u)
    return cands[rng.randrange(len(cands))]


# ---------------------------------------------------------------------------
# Integration: a regional protocol over dependency candidate sets

class InnerRegional:
    """Positional regional protocol applied to per-selection candidate sets.

    State persists across selections while membership is re-derived from each
    candidate list: the list is cut into min(n_regions, len) contiguous
    chunks and the protocol's weights are applied to chunk positions.  For
    the moving window the hot chunk is the window position modulo the chunk
    count, so the hot sub-region stays visible and advances on every change
    iteration even for tiny candidate sets.
    """

    def __init__(self, cfg: RegionalConfig, seed: int = 0):
        self.cfg = cfg
        # Abstract slots stand in for region members.
        self.state = regional_init(cfg, list(range(cfg.n_regions)), seed)

    def step(self) -> None:
        regional_step(self.state)

    def pick(self, candidates: list[int], rng: random.Random) -> int:
        n = len(candidates)
        if n == 1:
            return candidates[0]
        n_eff = min(self.cfg.n_regions, n)
        base, rem = divmod(n, n_eff)
        weights = self._chunk_weights(n_eff)
        total = sum(weights)
        x = rng.random() * total
        acc = 0.0
        idx = n_eff - 1
        for i, w in enumerate(weights):
            acc += w
            if x < acc:
                idx = i
                break
        start = idx * base
        count = base + rem if idx == n_eff - 1 else base
        return candidates[start + rng.randrange(count)]

    def _chunk_weights(self, n_eff: int) -> list[float]:
        if self.state.protocol == MOVING_WINDOW:
            hot = self.state.window % n_eff
            return [self.cfg.highest_prob_w if i == hot else self.cfg.lowest_prob_w
                    for i in range(n_eff)]
        return [self.state.hrset.regions[i].prob_w for i in range(n_eff)]


# ---------------------------------------------------------------------------
# Root selection driver

_DEP_KINDS = ("random", "s_ref", "d_ref", "traversed", "class")


class RootSelector:
    """Produces the root oid for each transaction.

    Without a dependency config this is the plain regional setting: the
    configured protocol's H-regions cover the whole database and the window
    advances every change interval.  With a dependency config the hybrid
    two-phase setting runs: one skewed random selection, then ``r``
    dependency selections drawn from the protocol mix, repeated forever.
    When integration is on, candidate sets are resolved through an
    InnerRegional sharing the same change-interval clock.
    """

    def __init__(self, db: Database, regional: RegionalConfig | None = None,
                 dependency: DependencyConfig | None = None,
                 integration: bool = False,
                 phase1_hot_fraction: float = 0.03,
                 phase1_hot_prob: float = 0.80,
                 workload_kind: OpKind = OpKind.SIMPLE_TRAVERSAL,
                 seed: int = 0):
        if regional is None and dependency is None:
            raise ConfigError("need a regional or dependency configuration")
        if (integration and dependency is not None
                and dependency.traversed_dep_prob > 0
                and workload_kind == OpKind.STOCHASTIC_TRAVERSAL):
            raise ConfigError(
                "traversed-set integration requires a deterministic traversal")
        if dependency is not None:
            dependency.validate()

        self.db = db
        self.dependency = dependency
        self.integration = integration
        self.rng = random.Random(f"{seed}|roots")
        self.oids = sorted(db.objects)
        h = (regional.h_rate if regional is not None else 1.0)
        self.interval = change_interval(h)
        self.selections = 0
        self.prev_root: int | None = None
        self.prev_trace: AccessRecord | None = None
        self.fallbacks = 0

        self.outer: RegionalState | None = None
        self.inner: InnerRegional | None = None
        self.phase1_set: HRegionSet | None = None
        self.d_refs: dict[int, list[int]] | None = None

        class_of = {oid: db.objects[oid].class_id for oid in self.oids}
        if dependency is None:
            self.outer = regional_init(regional, self.oids, seed, class_of)
        else:
            self.phase1_set = _skew_set(self.oids, phase1_hot_fraction,
                                        phase1_hot_prob, seed)
            if integration:
                if regional is None:
                    raise ConfigError("integration needs a regional config")
                self.inner = InnerRegional(regional, seed)
            if dependency.dref_dep_prob > 0:
                self.d_refs = build_d_refs(db, dependency.d, seed)
            self._phase = 1
            self._remaining = 0

    # -- public API --------------------------------------------------------

    def next_root(self) -> int:
        if self.selections > 0 and self.selections % self.interval == 0:
            self._change_iteration()
        self.selections += 1
        root = self._select()
        self.prev_root = root
        return root

    def note_trace(self, record: AccessRecord) -> None:
        self.prev_trace = record

    # -- internals ---------------------------------------------------------

    def _change_iteration(self) -> None:
        if self.outer is not None:
            regional_step(self.outer)
        if self.inner is not None:
            self.inner.step()

    def _select(self) -> int:
        if self.dependency is None:
            return select_root(self.outer.hrset, self.rng)
        dep = self.dependency
        if self._phase == 1 or dep.r == 0:
            root = select_root(self.phase1_set, self.rng)
            if dep.r > 0:
                self._phase = 2
                self._remaining = dep.r
            return root
        kind = self._sample_kind()
        cands = self._candidates(kind)
        if cands:
            root = self._pick(cands)
        else:
            self.fallbacks += 1
            root = select_root(self.phase1_set, self.rng)
        self._remaining -= 1
        if self._remaining == 0:
            self._phase = 1
        return root

    def _sample_kind(self) -> str:
        x = self.rng.random()
        acc = 0.0
        for kind, p in zip(_DEP_KINDS, self.dependency.mix()):
            acc += p
            if x < acc:
                return kind
        return _DEP_KINDS[-1]

    def _candidates(self, kind: str) -> list[int]:
        dep = self.dependency
        if kind == "random" or self.prev_root is None:
            return []
        if kind in ("s_ref", "d_ref"):
            if self.prev_root not in self.db.objects:
                return []
            return candidates_by_reference(self.db, self.prev_root, kind, self.d_refs)
        if kind == "traversed":
            if self.prev_trace is None:
                return []
            return candidates_traversed(self.prev_trace, dep.c)
        if self.prev_root not in self.db.objects:
            return []
        return candidates_same_class(self.db, self.prev_root, dep.u)

    def _pick(self, candidates: list[int]) -> int:
        if self.inner is not None:
            return self.inner.pick(candidates, self.rng)
        return candidates[self.rng.randrange(len(candidates))]


def _skew_set(oids: list[int], hot_fraction: float, hot_prob: float,
              seed: int) -> HRegionSet:
    """Static hot/cold split used as the hybrid randomization function."""
    hrset = partition(oids, [hot_fraction, 1.0 - hot_fraction], "random",
                      seed + 101)
    hot, cold = hrset.regions
    hot.prob_w = hot.highest_prob_w = hot_prob
    cold.prob_w = cold.highest_prob_w = 1.0 - hot_prob
    return hrset
