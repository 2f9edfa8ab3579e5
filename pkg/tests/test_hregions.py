import random
from collections import Counter

import pytest
from scipy import stats

from driftbench.errors import DegenerateWeightsError, ParameterError
from driftbench.hregions import (DOWN, UP, HRegion, HRegionSet, adjust_weight,
                                 equal_sizes, partition, select_root)


class TestPartition:
    def test_disjoint_and_complete(self):
        oids = list(range(1000))
        hrset = partition(oids, [0.25, 0.25, 0.5], "random", seed=1)
        seen = [o for r in hrset.regions for o in r.members]
        assert sorted(seen) == oids

    def test_sizes_with_remainder(self):
        hrset = partition(list(range(10)), equal_sizes(3), "random", seed=1)
        counts = [len(r.members) for r in hrset.regions]
        assert counts == [3, 3, 4]  # last region absorbs the remainder

    def test_by_class_groups_members(self):
        oids = list(range(100))
        class_of = {o: o % 4 for o in oids}
        hrset = partition(oids, equal_sizes(4), "by_class", seed=0,
                          class_of=class_of)
        for region in hrset.regions:
            assert len({class_of[o] for o in region.members}) == 1

    def test_random_is_seeded(self):
        a = partition(list(range(50)), equal_sizes(5), "random", seed=9)
        b = partition(list(range(50)), equal_sizes(5), "random", seed=9)
        assert [r.members for r in a.regions] == [r.members for r in b.regions]

    def test_bad_sizes_rejected(self):
        with pytest.raises(ParameterError):
            partition(list(range(10)), [0.5, 0.6], "random", seed=0)

    def test_empty_oids_rejected(self):
        with pytest.raises(ParameterError):
            partition([], [1.0], "random", seed=0)


class TestSelect:
    def test_weight_proportional_selection(self):
        # chi-square over a 3-region split with weights 1:2:5
        hrset = partition(list(range(300)), equal_sizes(3), "random", seed=2)
        for region, w in zip(hrset.regions, (1.0, 2.0, 5.0)):
            region.prob_w = w
        rng = random.Random(7)
        counts = Counter()
        n = 40_000
        members = [set(r.members) for r in hrset.regions]
        for _ in range(n):
            oid = select_root(hrset, rng)
            for i, m in enumerate(members):
                if oid in m:
                    counts[i] += 1
        expected = [n / 8, n / 4, 5 * n / 8]
        chi2, p = stats.chisquare([counts[i] for i in range(3)], expected)
        assert p > 0.001

    def test_uniform_within_region(self):
        hrset = HRegionSet(regions=[HRegion(hr_size=1.0, prob_w=1.0,
                                            members=[10, 11, 12, 13])])
        rng = random.Random(1)
        counts = Counter(select_root(hrset, rng) for _ in range(8000))
        for oid in (10, 11, 12, 13):
            assert abs(counts[oid] / 8000 - 0.25) < 0.03

    def test_empty_regions_skipped(self):
        hrset = HRegionSet(regions=[
            HRegion(hr_size=0.5, prob_w=100.0, members=[]),
            HRegion(hr_size=0.5, prob_w=0.1, members=[1, 2])])
        rng = random.Random(0)
        assert all(select_root(hrset, rng) in (1, 2) for _ in range(50))

    def test_all_zero_weights_raise(self):
        hrset = HRegionSet(regions=[HRegion(hr_size=1.0, prob_w=0.0,
                                            members=[1])])
        with pytest.raises(DegenerateWeightsError):
            select_root(hrset, random.Random(0))


class TestAdjust:
    def test_up_then_clamp(self):
        r = HRegion(hr_size=0.1, prob_w=0.75, lowest_prob_w=0.0,
                    highest_prob_w=0.8, prob_w_incr_size=0.1, direction=UP)
        adjust_weight(r)
        assert r.prob_w == 0.8
        adjust_weight(r)
        assert r.prob_w == 0.8

    def test_down_then_clamp(self):
        r = HRegion(hr_size=0.1, prob_w=0.05, lowest_prob_w=0.0006,
                    highest_prob_w=0.8, prob_w_incr_size=0.1, direction=DOWN)
        adjust_weight(r)
        assert r.prob_w == 0.0006


def test_equal_sizes_sums_to_one():
    for n in (1, 3, 7, 334):
        assert sum(equal_sizes(n)) == pytest.approx(1.0, abs=1e-12)
        assert len(equal_sizes(n)) == n
