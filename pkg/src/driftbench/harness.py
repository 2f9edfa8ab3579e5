"""Experiment orchestration: sweep H across clusterers and report metrics.

An ExperimentSpec composes a database, a workload, a change protocol and a
simulator configuration.  ``run_experiment`` sweeps every (h, clusterer)
cell and returns one metrics row per cell.  Named presets reproduce the
standard experiment designs; ``report`` renders results as CSV, an aligned
table, or log2-scale plot data.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import math
import random
from dataclasses import dataclass, field

from .clustering import ClustererConfig, canonical_kind, make_clusterer
from .database import Database, SchemaParams, build_database
from .errors import ParameterError
from .protocols import (DependencyConfig, GRADUAL_MOVING_WINDOW,
                        MOVING_WINDOW, RegionalConfig, RootSelector)
from .storage import SimConfig, place_sequential, run_trace
from .workload import AccessRecord, OpKind, WorkloadParams, execute

# Default h grid: powers of 2 from 2^-11 (~0.00049) up to 1, matching the
# log2 x-axis used for every figure.
DEFAULT_H_VALUES = [2.0 ** -k for k in range(11, -1, -1)]

# Column order of the metrics CSV.
CSV_FIELDS = ("H", "protocol", "clusterer", "txn_read_io", "clust_read_io",
              "clust_write_io", "total_io", "buffer_hits")

# Short clusterer labels used in rows and on the CLI.
CLI_NAMES = {"none": "nc", "dstc": "dstc", "dro": "dro", "gp": "gp",
             "prp": "prp"}

PRESET_NAMES = ("fig2a", "fig2b", "fig3a", "fig3b", "fig5_workload")


@dataclass
class ExperimentSpec:
    name: str = "custom"
    schema: SchemaParams = field(default_factory=SchemaParams)
    size_profile: str = "flat"
    workload: WorkloadParams = field(default_factory=WorkloadParams)
    regional: RegionalConfig | None = field(default_factory=RegionalConfig)
    dependency: DependencyConfig | None = None
    integration: bool = False
    phase1_hot_fraction: float = 0.03
    phase1_hot_prob: float = 0.80
    sim: SimConfig = field(default_factory=SimConfig)
    clusterers: list[str] = field(default_factory=lambda: ["none"])
    clusterer_overrides: dict[str, ClustererConfig] = field(default_factory=dict)
    transactions: int = 10_000
    h_values: list[float] = field(default_factory=lambda: list(DEFAULT_H_VALUES))
    seed: int = 42

    def validate(self) -> None:
        if not self.h_values:
            raise ParameterError("h_values must be non-empty")
        if self.transactions < 1:
            raise ParameterError("transactions must be >= 1")
        if not self.clusterers:
            raise ParameterError("need at least one clusterer")
        self.schema.validate()
        for kind in self.clusterers:
            self.clusterer_config(kind).validate()

    def clusterer_config(self, kind: str) -> ClustererConfig:
        if kind in self.clusterer_overrides:
            return self.clusterer_overrides[kind]
        return ClustererConfig(kind=kind)

    def protocol_label(self) -> str:
        base = self.regional.protocol if self.regional is not None else "none"
        if self.dependency is None:
            return base
        dep = self.dependency
        kinds = [name for name, p in zip(
            ("random", "s_ref", "d_ref", "traversed", "class"), dep.mix())
            if p > 0]
        label = "+".join(kinds) if kinds else "random"
        return f"hybrid_{label}({base})" if self.integration else f"hybrid_{label}"

    def config_hash(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=str)
        return hashlib.sha1(blob.encode()).hexdigest()[:12]


@dataclass
class SweepResult:
    spec_name: str
    seed: int
    config_hash: str
    rows: list[dict] = field(default_factory=list)


def generate_trace(db: Database, spec: ExperimentSpec,
                   h: float) -> list[AccessRecord]:
    """Protocol-driven root sequence plus workload execution, one record per
    transaction.  Deterministic in (spec.seed, h)."""
    regional = None
    if spec.regional is not None:
        regional = dataclasses.replace(spec.regional, h_rate=h)
    selector = RootSelector(
        db, regional=regional, dependency=spec.dependency,
        integration=spec.integration,
        phase1_hot_fraction=spec.phase1_hot_fraction,
        phase1_hot_prob=spec.phase1_hot_prob,
        workload_kind=spec.workload.op_kind, seed=spec.seed)
    wrng = random.Random(f"{spec.seed}|ops|{h}")
    trace = []
    for seq in range(spec.transactions):
        root = selector.next_root()
        rec = execute(db, root, spec.workload, wrng, seq)
        selector.note_trace(rec)
        trace.append(rec)
    return trace


def run_experiment(spec: ExperimentSpec, progress=None) -> SweepResult:
    """Run every (h, clusterer) cell.

    The database build and the trace for a given h are deterministic in the
    seed, so the immutable database and the per-h trace are shared across
    clusterer cells; each cell still gets its own page map, buffer and
    clusterer state.  Evolution workloads mutate the database, so those
    rebuild everything per cell.
    """
    spec.validate()
    result = SweepResult(spec_name=spec.name, seed=spec.seed,
                         config_hash=spec.config_hash())
    mutates = spec.workload.op_kind == OpKind.DATABASE_EVOLUTION
    db = None
    if not mutates:
        db = build_database(spec.schema, spec.seed, size_profile=spec.size_profile)
    label = spec.protocol_label()
    for h in spec.h_values:
        trace = None
        if not mutates:
            trace = generate_trace(db, spec, h)
        for kind in spec.clusterers:
            if mutates:
                db = build_database(spec.schema, spec.seed,
                                    size_profile=spec.size_profile)
                pagemap = place_sequential(db, spec.sim)
                trace = generate_trace(db, spec, h)
            else:
                pagemap = place_sequential(db, spec.sim)
            clusterer = make_clusterer(spec.clusterer_config(kind))
            metrics = run_trace(trace, pagemap, spec.sim, clusterer)
            row = {
                "H": h,
                "protocol": label,
                "clusterer": CLI_NAMES.get(canonical_kind(kind), kind),
                "txn_read_io": metrics.txn_read_io,
                "clust_read_io": metrics.clust_read_io,
                "clust_write_io": metrics.clust_write_io,
                "total_io": metrics.total_io,
                "buffer_hits": metrics.buffer_hits,
            }
            result.rows.append(row)
            if progress is not None:
                progress(row)
    return result


# ---------------------------------------------------------------------------
# Presets

def _table4_regional(protocol: str) -> RegionalConfig:
    # HR-SIZE 0.003 -> 334 regions (1 hot + 333 cold); HIGHEST 0.80,
    # LOWEST 0.0006, PROB-W-INCR-SIZE 0.02, random object assignment.
    return RegionalConfig(protocol=protocol, n_regions=334,
                          highest_prob_w=0.80, lowest_prob_w=0.0006,
                          prob_w_incr_size=0.02, assign_method="random")


def _experiment_schema() -> SchemaParams:
    return SchemaParams(nc=50, maxnref=10, basesize=50, no=100_000, nreft=4)


def preset(name: str) -> ExperimentSpec:
    """Named experiment designs.

    fig2a/fig2b: pure moving / gradual moving window regional protocols over
    a 100,000 object database, all five clusterers, depth-2 traversals.
    fig3a/fig3b: the same regional protocols integrated with S-reference
    dependency under the hybrid setting, R = 1, hot 3% at 80%.
    fig5_workload: traversed-objects dependency integrated with a 20-region
    moving window, C = 1.0, hot 1% at 99%; intended for trace generation.
    """
    if name not in PRESET_NAMES:
        raise ParameterError(f"unknown preset {name!r}")
    common = dict(
        schema=_experiment_schema(), size_profile="spread",
        workload=WorkloadParams(op_kind=OpKind.SIMPLE_TRAVERSAL, depth=2),
        sim=SimConfig(page_size=4096, buffer_pages=1024, replacement="lru"),
        clusterers=["none", "dstc", "dro", "gp", "prp"],
        transactions=10_000, h_values=list(DEFAULT_H_VALUES), seed=42)
    if name == "fig2a":
        return ExperimentSpec(name=name, regional=_table4_regional(MOVING_WINDOW),
                              **common)
    if name == "fig2b":
        return ExperimentSpec(name=name,
                              regional=_table4_regional(GRADUAL_MOVING_WINDOW),
                              **common)
    if name in ("fig3a", "fig3b"):
        protocol = MOVING_WINDOW if name == "fig3a" else GRADUAL_MOVING_WINDOW
        return ExperimentSpec(
            name=name, regional=_table4_regional(protocol),
            dependency=DependencyConfig(sref_dep_prob=1.0, r=1),
            integration=True, phase1_hot_fraction=0.03, phase1_hot_prob=0.80,
            **common)
    # fig5_workload: trace generation only, so just the none clusterer.
    common["clusterers"] = ["none"]
    regional = _table4_regional(MOVING_WINDOW)
    regional.n_regions = 20  # HR-SIZE 0.05
    return ExperimentSpec(
        name=name, regional=regional,
        dependency=DependencyConfig(traversed_dep_prob=1.0, c=1.0, r=1),
        integration=True, phase1_hot_fraction=0.01, phase1_hot_prob=0.99,
        **common)


# ---------------------------------------------------------------------------
# Reporting

def report(result: SweepResult, fmt: str = "csv") -> str:
    if not result.rows:
        raise ParameterError("cannot report an empty result")
    if fmt == "csv":
        return _report_csv(result)
    if fmt == "table":
        return _report_table(result)
    if fmt == "plotdata":
        return _report_plotdata(result)
    raise ParameterError(f"unknown report format {fmt!r}")


def _format_h(h: float) -> str:
    return repr(h)


def _report_csv(result: SweepResult) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_FIELDS) + "\n")
    for row in result.rows:
        out.write(",".join(_format_h(row[f]) if f == "H" else str(row[f])
                           for f in CSV_FIELDS) + "\n")
    return out.getvalue()


def _report_table(result: SweepResult) -> str:
    rows = sorted(result.rows, key=lambda r: (r["clusterer"], r["H"]))
    cells = [[str(f) for f in CSV_FIELDS]]
    for row in rows:
        cells.append([_format_h(row["H"])] + [str(row[f]) for f in CSV_FIELDS[1:]])
    widths = [max(len(r[i]) for r in cells) for i in range(len(CSV_FIELDS))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _report_plotdata(result: SweepResult) -> str:
    """TSV: log2(h) in the first column, one total_io series per clusterer."""
    series: dict[str, dict[float, int]] = {}
    hs: list[float] = []
    for row in result.rows:
        series.setdefault(row["clusterer"], {})[row["H"]] = row["total_io"]
        if row["H"] not in hs:
            hs.append(row["H"])
    names = sorted(series)
    out = io.StringIO()
    out.write("\t".join(["log2_h"] + names) + "\n")
    for h in sorted(hs):
        vals = [series[n].get(h, "") for n in names]
        out.write("\t".join([repr(math.log2(h))] + [str(v) for v in vals]) + "\n")
    return out.getvalue()


def rows_from_csv(text: str) -> list[dict]:
    """Parse a metrics CSV produced by report(..., \"csv\") back into rows."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ",".join(CSV_FIELDS):
        raise ParameterError("unrecognized metrics CSV header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        row = dict(zip(CSV_FIELDS, parts))
        row["H"] = float(row["H"])
        for f in CSV_FIELDS[3:]:
            row[f] = int(row[f])
        rows.append(row)
    return rows
