"""Object database generation: classes, objects, typed references, back-references.

The database is a graph of ``no`` objects spread over ``nc`` classes.  Classes
carry typed class-level references (crefs) whose targets are confined to an
ID window (``clocref``); objects instantiate those references (orefs) inside
their own window (``olocref``).  Every oref gets a mirrored back-reference.
Reference types 0 and 1 (inheritance, composition) must stay acyclic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import ParameterError, PlacementError

# Reference types whose graphs may not contain cycles.
ACYCLIC_REF_TYPES = frozenset({0, 1})

# Size profile for the "spread" calibration: per-class instance sizes are
# drawn from basesize * (1 + 31 * q^7.5) over stratified quantiles q, which
# spans roughly [basesize, 32*basesize] with a mean near 4.65 * basesize.
_SPREAD_MAX_FACTOR = 31.0
_SPREAD_EXPONENT = 7.5

_SELF_REF_RETRIES = 8


@dataclass
class SchemaParams:
    nc: int = 50
    maxnref: int = 10
    basesize: int = 50
    no: int = 20_000
    nreft: int = 4
    attrange: int = 1
    clocref: int | None = None  # defaults to nc
    olocref: int | None = None  # defaults to no

    def __post_init__(self):
        if self.clocref is None:
            self.clocref = self.nc
        if self.olocref is None:
            self.olocref = self.no

    def validate(self) -> None:
        if self.nc < 1 or self.no < 1 or self.nreft < 1:
            raise ParameterError("nc, no and nreft must all be >= 1")
        if self.maxnref < 0:
            raise ParameterError("maxnref must be >= 0")
        if not (1 <= self.clocref <= self.nc):
            raise ParameterError(f"clocref must be in [1, nc], got {self.clocref}")
        if not (1 <= self.olocref <= self.no):
            raise ParameterError(f"olocref must be in [1, no], got {self.olocref}")
        if self.basesize < 1:
            raise ParameterError("basesize must be >= 1")
        if self.attrange < 0:
            raise ParameterError("attrange must be >= 0")


@dataclass
class ClassSpec:
    class_id: int
    crefs: list[tuple[int, int]] = field(default_factory=list)  # (target class, ref type)
    basesize: int = 50
    size_target: int | None = None  # calibration goal for the spread profile
    iterator: list[int] = field(default_factory=list)  # member oids, creation order

    @property
    def instance_size(self) -> int:
        """Bytes per instance: basesize * (1 + reference count)."""
        return self.basesize * (1 + len(self.crefs))


@dataclass
class ObjectInstance:
    oid: int
    class_id: int
    orefs: list[tuple[int, int]] = field(default_factory=list)  # (target oid, ref type)
    backrefs: list[int] = field(default_factory=list)
    attributes: list[int] = field(default_factory=list)
    filler_size: int = 0


@dataclass
class Database:
    params: SchemaParams
    classes: list[ClassSpec]
    objects: dict[int, ObjectInstance]
    rng_seed: int
    next_oid: int = 0

    def class_of(self, oid: int) -> ClassSpec:
        return self.classes[self.objects[oid].class_id]


def object_size(obj: ObjectInstance) -> int:
    """Size in bytes of an object's filler payload."""
    return obj.filler_size


def generate_schema(params: SchemaParams, seed: int,
                    size_profile: str = "flat") -> list[ClassSpec]:
    """Create ``nc`` classes with locality-constrained typed references.

    Each class draws its reference count uniformly in [1, maxnref] (0 when
    maxnref is 0) and every reference target uniformly from the clamped
    window [class_id - clocref, class_id + clocref], excluding itself.

    ``size_profile`` selects how per-class basesize is assigned:

    * ``"flat"``   -- every class uses ``params.basesize`` directly.
    * ``"spread"`` -- per-class instance-size targets follow a right-skewed
      stratified profile spanning [basesize, 32*basesize]; basesize is then
      back-computed so that instance_size lands on the target.  With the
      default basesize of 50 this yields sizes in roughly [50, 1600] with a
      mean near 233 bytes.
    """
    params.validate()
    if size_profile not in ("flat", "spread"):
        raise ParameterError(f"unknown size profile {size_profile!r}")
    rng = random.Random(seed)

    classes: list[ClassSpec] = []
    for cid in range(params.nc):
        nrefs = rng.randint(1, params.maxnref) if params.maxnref > 0 else 0
        crefs: list[tuple[int, int]] = []
        lo = max(0, cid - params.clocref)
        hi = min(params.nc - 1, cid + params.clocref)
        for _ in range(nrefs):
            target = _draw_excluding(rng, lo, hi, cid)
            if target is None:
                continue
            crefs.append((target, rng.randrange(params.nreft)))
        classes.append(ClassSpec(class_id=cid, crefs=crefs, basesize=params.basesize))

    if size_profile == "spread":
        perm = rng.sample(range(params.nc), params.nc)
        for cls, rank in zip(classes, perm):
            q = (rank + 0.5) / params.nc
            cls.size_target = round(
                params.basesize * (1.0 + _SPREAD_MAX_FACTOR * q ** _SPREAD_EXPONENT))
    calibrate_sizes(classes)
    return classes


def calibrate_sizes(classes: list[ClassSpec]) -> None:
    """Recompute per-class basesize from size targets and current cref counts.

    Classes without a size target keep their basesize as-is.  Called again
    after consistency checking so that edge removal does not drift the total
    database size away from the calibration goal.
    """
    for cls in classes:
        if cls.size_target is not None:
            cls.basesize = max(1, round(cls.size_target / (1 + len(cls.crefs))))


def check_consistency(classes: list[ClassSpec],
                      acyclic_types: frozenset[int] = ACYCLIC_REF_TYPES) -> list[ClassSpec]:
    """Drop class references that close a cycle in a cycle-free reference type.

    Edges are considered in (class id, slot) order and an edge is removed
    exactly when the target can already reach the source through kept edges
    of the same type.  Other reference types are untouched, and an already
    acyclic input comes back unchanged.
    """
    for rtype in sorted(acyclic_types):
        adj: dict[int, set[int]] = {c.class_id: set() for c in classes}
        for cls in classes:
            kept: list[tuple[int, int]] = []
            for target, ty in cls.crefs:
                if ty == rtype and _reaches(adj, target, cls.class_id):
                    continue  # would close a cycle
                if ty == rtype:
                    adj[cls.class_id].add(target)
                kept.append((target, ty))
            cls.crefs = kept
    calibrate_sizes(classes)
    return classes


def _reaches(adj: dict[int, set[int]], src: int, dst: int) -> bool:
    if src == dst:
        return True
    seen = {src}
    stack = [src]
    while stack:
        node = stack.pop()
        for nxt in adj.get(node, ()):
            if nxt == dst:
                return True
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def instantiate_objects(classes: list[ClassSpec], params: SchemaParams,
                        seed: int) -> Database:
    """Create ``no`` objects, draw their references and install back-references.

    Objects are assigned to classes uniformly.  Each class-level cref is
    instantiated with one target drawn uniformly from the clamped window
    [oid - olocref, oid + olocref]; self references are redrawn and the slot
    is dropped when no valid target exists.  References of acyclic types only
    point to higher oids, which keeps those object graphs cycle-free by
    construction.
    """
    params.validate()
    rng = random.Random(seed)
    no = params.no
    objects: dict[int, ObjectInstance] = {}

    for oid in range(no):
        cls = classes[rng.randrange(len(classes))]
        obj = ObjectInstance(
            oid=oid,
            class_id=cls.class_id,
            attributes=[rng.randrange(10_000) for _ in range(params.attrange)],
            filler_size=cls.instance_size,
        )
        objects[oid] = obj
        cls.iterator.append(oid)

    for oid in range(no):
        obj = objects[oid]
        cls = classes[obj.class_id]
        for _, rtype in cls.crefs:
            if rtype in ACYCLIC_REF_TYPES:
                lo, hi = oid + 1, min(no - 1, oid + params.olocref)
                if lo > hi:
                    continue
                target = rng.randint(lo, hi)
            else:
                lo = max(0, oid - params.olocref)
                hi = min(no - 1, oid + params.olocref)
                target = _draw_excluding(rng, lo, hi, oid)
                if target is None:
                    continue
            obj.orefs.append((target, rtype))
            objects[target].backrefs.append(oid)

    return Database(params=params, classes=classes, objects=objects,
                    rng_seed=seed, next_oid=no)


def build_database(params: SchemaParams, seed: int,
                   size_profile: str = "flat") -> Database:
    """Full generation pipeline: schema, consistency check, instantiation."""
    classes = generate_schema(params, seed, size_profile=size_profile)
    check_consistency(classes)
    return instantiate_objects(classes, params, seed)


def _draw_excluding(rng: random.Random, lo: int, hi: int, forbidden: int):
    """Uniform draw from [lo, hi] excluding one value, bounded retries."""
    if lo > hi or (lo == hi == forbidden):
        return None
    for _ in range(_SELF_REF_RETRIES):
        v = rng.randint(lo, hi)
        if v != forbidden:
            return v
    return None


# ---------------------------------------------------------------------------
# Serialization: versioned line-based format, one object per record.

_FORMAT_VERSION = "driftbench-db-1"


def save_database(db: Database, path: str) -> None:
    with open(path, "w") as f:
        f.write(f"#{_FORMAT_VERSION}\n")
        p = db.params
        f.write(f"P|{p.nc}|{p.maxnref}|{p.basesize}|{p.no}|{p.nreft}"
                f"|{p.attrange}|{p.clocref}|{p.olocref}|{db.rng_seed}|{db.next_oid}\n")
        for cls in db.classes:
            crefs = ",".join(f"{t}:{ty}" for t, ty in cls.crefs)
            tgt = "" if cls.size_target is None else str(cls.size_target)
            f.write(f"C|{cls.class_id}|{cls.basesize}|{tgt}|{crefs}\n")
        for oid in sorted(db.objects):
            o = db.objects[oid]
            orefs = ",".join(f"{t}:{ty}" for t, ty in o.orefs)
            attrs = ",".join(str(a) for a in o.attributes)
            f.write(f"O|{o.oid}|{o.class_id}|{orefs}|{attrs}|{o.filler_size}\n")


def load_database(path: str) -> Database:
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != f"#{_FORMAT_VERSION}":
            raise ParameterError(f"unrecognized database file header: {header!r}")
        fields = f.readline().rstrip("\n").split("|")
        if fields[0] != "P":
            raise ParameterError("missing parameter record")
        nc, maxnref, basesize, no, nreft, attrange, clocref, olocref, seed, next_oid = (
            int(x) for x in fields[1:])
        params = SchemaParams(nc=nc, maxnref=maxnref, basesize=basesize, no=no,
                              nreft=nreft, attrange=attrange,
                              clocref=clocref, olocref=olocref)
        classes: list[ClassSpec] = []
        objects: dict[int, ObjectInstance] = {}
        for line in f:
            parts = line.rstrip("\n").split("|")
            if parts[0] == "C":
                _, cid, bsize, tgt, crefs = parts
                classes.append(ClassSpec(
                    class_id=int(cid), basesize=int(bsize),
                    size_target=int(tgt) if tgt else None,
                    crefs=_parse_refs(crefs)))
            elif parts[0] == "O":
                _, oid, cid, orefs, attrs, filler = parts
                objects[int(oid)] = ObjectInstance(
                    oid=int(oid), class_id=int(cid), orefs=_parse_refs(orefs),
                    attributes=[int(a) for a in attrs.split(",")] if attrs else [],
                    filler_size=int(filler))

    # Iterators and back-references are derived state; rebuild them.
    for oid in sorted(objects):
        obj = objects[oid]
        classes[obj.class_id].iterator.append(oid)
    for oid in sorted(objects):
        for target, _ in objects[oid].orefs:
            objects[target].backrefs.append(oid)
    return Database(params=params, classes=classes, objects=objects,
                    rng_seed=seed, next_oid=next_oid)


def _parse_refs(text: str) -> list[tuple[int, int]]:
    if not text:
        return []
    out = []
    for pair in text.split(","):
        t, ty = pair.split(":")
        out.append((int(t), int(ty)))
    return out


def mean_object_size(db: Database) -> float:
    if not db.objects:
        raise PlacementError("empty database")
    return sum(o.filler_size for o in db.objects.values()) / len(db.objects)
