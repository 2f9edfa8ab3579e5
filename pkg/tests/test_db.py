import random

import pytest
from hypothesis import given, settings, strategies as st

from driftbench.database import (ACYCLIC_REF_TYPES, ClassSpec, SchemaParams,
                                 build_database, check_consistency,
                                 generate_schema, instantiate_objects,
                                 load_database, mean_object_size,
                                 save_database)
from driftbench.errors import ParameterError


def small_params(**kw):
    defaults = dict(nc=10, maxnref=4, basesize=50, no=500, nreft=4)
    defaults.update(kw)
    return SchemaParams(**defaults)


def topological_order_exists(edges, nodes):
    """Kahn's algorithm; returns False when a cycle remains."""
    indeg = {n: 0 for n in nodes}
    adj = {n: [] for n in nodes}
    for a, b in edges:
        adj[a].append(b)
        indeg[b] += 1
    queue = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for m in adj[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    return seen == len(nodes)


class TestSchemaParams:
    def test_defaults_window_to_full_range(self):
        p = SchemaParams(nc=7, no=123)
        assert p.clocref == 7
        assert p.olocref == 123

    @pytest.mark.parametrize("kw", [
        dict(nc=0), dict(no=0), dict(maxnref=-1), dict(basesize=0),
        dict(clocref=0), dict(olocref=10_000_000), dict(nreft=0),
    ])
    def test_invalid_rejected(self, kw):
        with pytest.raises(ParameterError):
            small_params(**kw).validate()


class TestSchema:
    def test_class_count_and_ref_bounds(self):
        p = small_params()
        classes = generate_schema(p, seed=1)
        assert len(classes) == p.nc
        for cls in classes:
            assert 1 <= len(cls.crefs) <= p.maxnref
            for target, ty in cls.crefs:
                assert abs(target - cls.class_id) <= p.clocref
                assert target != cls.class_id
                assert 0 <= ty < p.nreft

    def test_zero_maxnref_gives_no_refs(self):
        classes = generate_schema(small_params(maxnref=0), seed=1)
        assert all(not cls.crefs for cls in classes)

    def test_deterministic(self):
        a = generate_schema(small_params(), seed=7)
        b = generate_schema(small_params(), seed=7)
        assert [(c.class_id, c.crefs, c.basesize) for c in a] == \
               [(c.class_id, c.crefs, c.basesize) for c in b]

    def test_spread_profile_sizes(self):
        classes = generate_schema(small_params(nc=50), seed=3,
                                  size_profile="spread")
        sizes = [c.instance_size for c in classes]
        assert min(sizes) >= 40
        assert max(sizes) <= 1700
        assert max(sizes) > 4 * min(sizes)


class TestConsistency:
    def test_acyclic_after_check(self):
        classes = generate_schema(small_params(nc=30), seed=5)
        check_consistency(classes)
        nodes = [c.class_id for c in classes]
        for rtype in ACYCLIC_REF_TYPES:
            edges = [(c.class_id, t) for c in classes
                     for t, ty in c.crefs if ty == rtype]
            assert topological_order_exists(edges, nodes)

    def test_already_acyclic_unchanged(self):
        classes = [ClassSpec(class_id=0, crefs=[(1, 0)]),
                   ClassSpec(class_id=1, crefs=[(2, 0)]),
                   ClassSpec(class_id=2, crefs=[])]
        before = [list(c.crefs) for c in classes]
        check_consistency(classes)
        assert [list(c.crefs) for c in classes] == before

    def test_two_cycle_broken(self):
        classes = [ClassSpec(class_id=0, crefs=[(1, 0)]),
                   ClassSpec(class_id=1, crefs=[(0, 0)])]
        check_consistency(classes)
        edges = [(c.class_id, t) for c in classes
                 for t, ty in c.crefs if ty == 0]
        assert edges == [(0, 1)]

    def test_other_types_untouched(self):
        classes = [ClassSpec(class_id=0, crefs=[(1, 2)]),
                   ClassSpec(class_id=1, crefs=[(0, 2)])]
        check_consistency(classes)
        assert sum(len(c.crefs) for c in classes) == 2


class TestObjects:
    def test_exact_object_count_and_oids(self):
        db = build_database(small_params(), seed=11)
        assert len(db.objects) == 500
        assert sorted(db.objects) == list(range(500))

    def test_reference_locality(self):
        p = small_params(olocref=20)
        db = build_database(p, seed=2)
        for obj in db.objects.values():
            for target, _ in obj.orefs:
                assert abs(target - obj.oid) <= p.olocref

    def test_backref_bijection(self):
        db = build_database(small_params(), seed=13)
        forward = sorted((o.oid, t) for o in db.objects.values()
                         for t, _ in o.orefs)
        backward = sorted((src, o.oid) for o in db.objects.values()
                          for src in o.backrefs)
        assert forward == backward

    def test_object_graph_acyclic_types(self):
        db = build_database(small_params(), seed=17)
        nodes = list(db.objects)
        for rtype in ACYCLIC_REF_TYPES:
            edges = [(o.oid, t) for o in db.objects.values()
                     for t, ty in o.orefs if ty == rtype]
            assert topological_order_exists(edges, nodes)

    def test_iterators_partition_objects(self):
        db = build_database(small_params(), seed=19)
        seen = sorted(oid for cls in db.classes for oid in cls.iterator)
        assert seen == sorted(db.objects)
        for cls in db.classes:
            for oid in cls.iterator:
                assert db.objects[oid].class_id == cls.class_id

    def test_no_self_references(self):
        db = build_database(small_params(), seed=23)
        non_acyclic_self = [
            o.oid for o in db.objects.values()
            for t, ty in o.orefs
            if t == o.oid and ty not in ACYCLIC_REF_TYPES]
        assert not non_acyclic_self


class TestCalibration:
    def test_experiment_scale_total_size(self):
        # ~23.3 MB over 100k objects, sizes in [50, 1600], mean near 233 B
        p = SchemaParams(nc=50, maxnref=10, basesize=50, no=100_000, nreft=4)
        db = build_database(p, seed=42, size_profile="spread")
        total = sum(o.filler_size for o in db.objects.values())
        assert abs(total - 23.3e6) / 23.3e6 < 0.15
        assert abs(mean_object_size(db) - 233) < 35
        sizes = {o.filler_size for o in db.objects.values()}
        assert min(sizes) >= 40 and max(sizes) <= 1700


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        db = build_database(small_params(), seed=29, size_profile="spread")
        path = str(tmp_path / "db.txt")
        save_database(db, path)
        back = load_database(path)
        assert sorted(back.objects) == sorted(db.objects)
        for oid in db.objects:
            a, b = db.objects[oid], back.objects[oid]
            assert (a.class_id, a.orefs, a.attributes, a.filler_size) == \
                   (b.class_id, b.orefs, b.attributes, b.filler_size)
            assert sorted(a.backrefs) == sorted(b.backrefs)
        assert [c.iterator for c in back.classes] == \
               [c.iterator for c in db.classes]
        assert back.next_oid == db.next_oid

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("#something-else\n")
        with pytest.raises(ParameterError):
            load_database(str(path))


@settings(max_examples=20, deadline=None)
@given(nc=st.integers(2, 12), no=st.integers(10, 300),
       maxnref=st.integers(0, 5), seed=st.integers(0, 1000))
def test_build_invariants_property(nc, no, maxnref, seed):
    p = SchemaParams(nc=nc, no=no, maxnref=maxnref, nreft=4)
    db = build_database(p, seed=seed)
    assert len(db.objects) == no
    forward = sorted((o.oid, t) for o in db.objects.values()
                     for t, _ in o.orefs)
    backward = sorted((s, o.oid) for o in db.objects.values()
                      for s in o.backrefs)
    assert forward == backward
