"""H-regions: weighted partitions of the object id space.

A region set partitions a candidate oid list into disjoint regions, each
carrying an unnormalized probability weight.  Root selection picks a region
with probability weight / sum-of-weights, then a uniform member.  Weights
are never normalized in place; only selection normalizes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import DegenerateWeightsError, ParameterError

UP = "up"
DOWN = "down"


@dataclass
class HRegion:
    hr_size: float
    prob_w: float = 0.0
    lowest_prob_w: float = 0.0
    highest_prob_w: float = 1.0
    prob_w_incr_size: float = 0.0
    direction: str = DOWN
    members: list[int] = field(default_factory=list)


@dataclass
class HRegionSet:
    regions: list[HRegion]
    assign_method: str = "random"


def partition(oids: list[int], sizes: list[float], method: str, seed: int,
              class_of: dict[int, int] | None = None) -> HRegionSet:
    """Split ``oids`` into regions of the given fractional sizes.

    ``random`` shuffles the oids (seeded) before cutting; ``by_class`` sorts
    them by class id so same-class objects land in the same region as much as
    possible.  Each region gets floor(size * n) members, with the last region
    absorbing the rounding remainder.
    """
    if not oids:
        raise ParameterError("cannot partition an empty oid list")
    if abs(sum(sizes) - 1.0) > 1e-9:
        raise ParameterError(f"region sizes must sum to 1, got {sum(sizes)}")
    if method == "random":
        ordered = list(oids)
        random.Random(seed).shuffle(ordered)
    elif method == "by_class":
        if class_of is None:
            raise ParameterError("by_class assignment needs a class mapping")
        ordered = sorted(oids, key=lambda o: (class_of[o], o))
    else:
        raise ParameterError(f"unknown assignment method {method!r}")

    n = len(ordered)
    regions = []
    pos = 0
    for i, size in enumerate(sizes):
        count = n - pos if i == len(sizes) - 1 else int(size * n)
        regions.append(HRegion(hr_size=size, members=ordered[pos:pos + count]))
        pos += count
    return HRegionSet(regions=regions, assign_method=method)


def select_root(hrset: HRegionSet, rng: random.Random) -> int:
    """Draw a region proportionally to its weight, then a uniform member.

    Empty regions never participate in the normalization.
    """
    live = [r for r in hrset.regions if r.members]
    total = sum(r.prob_w for r in live)
    if total <= 0.0:
        raise DegenerateWeightsError("all region weights are zero")
    x = rng.random() * total
    acc = 0.0
    chosen = live[-1]
    for r in live:
        acc += r.prob_w
        if x < acc:
            chosen = r
            break
    return chosen.members[rng.randrange(len(chosen.members))]


def adjust_weight(region: HRegion) -> HRegion:
    """Move the weight one increment in the region's direction, clamped."""
    if region.direction == UP:
        region.prob_w += region.prob_w_incr_size
    else:
        region.prob_w -= region.prob_w_incr_size
    region.prob_w = min(region.highest_prob_w,
                        max(region.lowest_prob_w, region.prob_w))
    return region


def equal_sizes(n: int) -> list[float]:
    """n region sizes that sum to exactly 1."""
    base = [1.0 / n] * n
    base[-1] = 1.0 - math.fsum(base[:-1])
    return base
