"""Workload operations: traversals, scans, updates, and the trace record format.

``execute`` runs one operation from a root object and returns the ordered
list of (oid, mode) accesses it performed.  One record corresponds to one
transaction in the simulator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .database import ACYCLIC_REF_TYPES, Database, ObjectInstance
from .errors import RootNotFoundError


class OpKind(str, Enum):
    RANDOM_ACCESS = "random_access"
    SCAN = "scan"
    RANGE_LOOKUP = "range_lookup"
    SET_TRAVERSAL = "set_traversal"
    SIMPLE_TRAVERSAL = "simple_traversal"
    HIERARCHY_TRAVERSAL = "hierarchy_traversal"
    STOCHASTIC_TRAVERSAL = "stochastic_traversal"
    ATTRIBUTE_UPDATE = "attribute_update"
    SEQUENTIAL_UPDATE = "sequential_update"
    DATABASE_EVOLUTION = "database_evolution"


@dataclass
class WorkloadParams:
    op_kind: OpKind = OpKind.SIMPLE_TRAVERSAL
    depth: int = 2
    reverse: bool = False
    nrnd: int = 10
    ntest: int = 1
    nupdt: int = 10
    hier_ref_type: int = 0


@dataclass
class AccessRecord:
    seq: int
    root_oid: int
    op_kind: OpKind
    accessed: list[tuple[int, str]] = field(default_factory=list)  # (oid, "r"/"w")


# Operations that do not need an existing root object.
_ROOTLESS = {OpKind.RANDOM_ACCESS, OpKind.DATABASE_EVOLUTION}


def execute(db: Database, root_oid: int, params: WorkloadParams,
            rng: random.Random, seq: int = 0) -> AccessRecord:
    """Run one workload operation and record its accesses in visit order.

    Traversal depth counts edges from the root: depth 0 visits the root only,
    depth 2 reaches grandchildren.  Visited-set traversals never record the
    same oid twice.
    """
    kind = params.op_kind
    if kind not in _ROOTLESS and root_oid not in db.objects:
        raise RootNotFoundError(f"no object with oid {root_oid}")

    rec = AccessRecord(seq=seq, root_oid=root_oid, op_kind=kind)
    acc = rec.accessed

    if kind == OpKind.RANDOM_ACCESS:
        oids = sorted(db.objects)
        for _ in range(params.nrnd):
            acc.append((oids[rng.randrange(len(oids))], "r"))
    elif kind in (OpKind.SCAN, OpKind.RANGE_LOOKUP):
        # Range lookup tests ntest attributes per instance; the accesses are
        # reads of the same object, so the recorded set is identical to a scan.
        for oid in db.class_of(root_oid).iterator:
            acc.append((oid, "r"))
    elif kind == OpKind.SIMPLE_TRAVERSAL:
        _dfs(db, root_oid, params.depth, params.reverse, None, acc)
    elif kind == OpKind.HIERARCHY_TRAVERSAL:
        _dfs(db, root_oid, params.depth, params.reverse, params.hier_ref_type, acc)
    elif kind == OpKind.SET_TRAVERSAL:
        _bfs(db, root_oid, params.depth, params.reverse, acc)
    elif kind == OpKind.STOCHASTIC_TRAVERSAL:
        _random_walk(db, root_oid, params.depth, params.reverse, rng, acc)
    elif kind == OpKind.ATTRIBUTE_UPDATE:
        oids = sorted(db.objects)
        k = min(params.nupdt, len(oids))
        for oid in rng.sample(oids, k):
            acc.append((oid, "w"))
    elif kind == OpKind.SEQUENTIAL_UPDATE:
        for oid in db.class_of(root_oid).iterator:
            acc.append((oid, "w"))
    elif kind == OpKind.DATABASE_EVOLUTION:
        _evolve(db, rng, acc)
    else:  # pragma: no cover
        raise ValueError(f"unhandled op kind {kind}")
    return rec


def _neighbors(obj: ObjectInstance, db: Database, reverse: bool,
               ref_type: int | None):
    if reverse:
        if ref_type is None:
            return obj.backrefs
        return [src for src in obj.backrefs
                if any(t == obj.oid and ty == ref_type
                       for t, ty in db.objects[src].orefs)]
    if ref_type is None:
        return [t for t, _ in obj.orefs]
    return [t for t, ty in obj.orefs if ty == ref_type]


def _dfs(db, root, depth, reverse, ref_type, acc):
    visited = {root}
    stack = [(root, 0)]
    while stack:
        oid, lvl = stack.pop()
        acc.append((oid, "r"))
        if lvl >= depth:
            continue
        children = [c for c in _neighbors(db.objects[oid], db, reverse, ref_type)
                    if c not in visited]
        for c in children:
            visited.add(c)
        for c in reversed(children):  # visit in stored order
            stack.append((c, lvl + 1))


def _bfs(db, root, depth, reverse, acc):
    from collections import deque

    visited = {root}
    queue = deque([(root, 0)])
    while queue:
        oid, lvl = queue.popleft()
        acc.append((oid, "r"))
        if lvl >= depth:
            continue
        for c in _neighbors(db.objects[oid], db, reverse, None):
            if c not in visited:
                visited.add(c)
                queue.append((c, lvl + 1))


def _random_walk(db, root, depth, reverse, rng, acc):
    seen = set()
    oid = root
    for step in range(depth + 1):
        if oid not in seen:
            seen.add(oid)
            acc.append((oid, "r"))
        if step == depth:
            break
        nxt = _neighbors(db.objects[oid], db, reverse, None)
        if not nxt:
            break  # sink: nothing left to cross
        oid = nxt[rng.randrange(len(nxt))]


def _evolve(db: Database, rng: random.Random, acc):
    """Insert or delete one object, keeping back-references consistent."""
    oids = sorted(db.objects)
    if rng.random() < 0.5 or len(oids) <= 1:
        template = db.objects[oids[rng.randrange(len(oids))]]
        cls = db.classes[template.class_id]
        oid = db.next_oid
        db.next_oid += 1
        obj = ObjectInstance(
            oid=oid, class_id=cls.class_id,
            attributes=[rng.randrange(10_000) for _ in range(db.params.attrange)],
            filler_size=cls.instance_size)
        db.objects[oid] = obj
        cls.iterator.append(oid)
        no = db.params.no
        for _, rtype in cls.crefs:
            if rtype in ACYCLIC_REF_TYPES:
                continue  # new oid is maximal; upward window is empty
            lo = max(0, oid - db.params.olocref)
            hi = min(max(oids), oid + db.params.olocref)
            for _ in range(8):
                t = rng.randint(lo, hi)
                if t != oid and t in db.objects:
                    obj.orefs.append((t, rtype))
                    db.objects[t].backrefs.append(oid)
                    break
        acc.append((oid, "w"))
    else:
        victim = db.objects[oids[rng.randrange(len(oids))]]
        for target, _ in victim.orefs:
            if target in db.objects:
                db.objects[target].backrefs.remove(victim.oid)
        for src in list(victim.backrefs):
            srco = db.objects[src]
            srco.orefs = [(t, ty) for t, ty in srco.orefs if t != victim.oid]
        db.classes[victim.class_id].iterator.remove(victim.oid)
        del db.objects[victim.oid]
        acc.append((victim.oid, "w"))


# ---------------------------------------------------------------------------
# Trace file format: seq,root_oid,op_kind,oid:mode;oid:mode;...

def write_trace(trace: list[AccessRecord], path: str) -> None:
    with open(path, "w") as f:
        for rec in trace:
            f.write(format_record(rec) + "\n")


def format_record(rec: AccessRecord) -> str:
    accesses = ";".join(f"{oid}:{mode}" for oid, mode in rec.accessed)
    return f"{rec.seq},{rec.root_oid},{rec.op_kind.value},{accesses}"


def read_trace(path: str) -> list[AccessRecord]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            seq, root, kind, accesses = line.split(",", 3)
            rec = AccessRecord(seq=int(seq), root_oid=int(root),
                               op_kind=OpKind(kind))
            if accesses:
                for pair in accesses.split(";"):
                    oid, mode = pair.split(":")
                    rec.accessed.append((int(oid), mode))
            out.append(rec)
    return out
