"""Command line interface.

Subcommands:

* ``gen``    generate a database file
* ``trace``  generate an access trace file
* ``run``    run a single (h, clusterer) cell and print its metrics row
* ``sweep``  run a full experiment, write the metrics CSV and a figure
* ``report`` re-render a metrics CSV as csv/table/plotdata, with a figure
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .clustering import ClustererConfig
from .config import load_config
from .database import SchemaParams, build_database, load_database, save_database
from .errors import DriftbenchError
from .harness import (CLI_NAMES, CSV_FIELDS, ExperimentSpec, PRESET_NAMES,
                      SweepResult, generate_trace, preset, report,
                      rows_from_csv, run_experiment)
from .workload import write_trace

_CLUSTERER_CHOICES = ("nc", "dstc", "dro", "gp", "prp")


def _spec_from_args(args) -> ExperimentSpec:
    if getattr(args, "config", None):
        spec = load_config(args.config)
    elif getattr(args, "preset", None):
        spec = preset(args.preset)
    else:
        spec = ExperimentSpec()
    if getattr(args, "seed", None) is not None:
        spec.seed = args.seed
    for name in ("nc", "maxnref", "basesize", "no", "nreft",
                 "clocref", "olocref"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(spec.schema, name, value)
    # windows default to the full id range; re-derive when nc/no shrank
    if getattr(args, "nc", None) is not None and \
            getattr(args, "clocref", None) is None:
        spec.schema.clocref = min(spec.schema.clocref, spec.schema.nc)
    if getattr(args, "no", None) is not None and \
            getattr(args, "olocref", None) is None:
        spec.schema.olocref = min(spec.schema.olocref, spec.schema.no)
    if getattr(args, "size_profile", None):
        spec.size_profile = args.size_profile
    if getattr(args, "transactions", None) is not None:
        spec.transactions = args.transactions
    return spec


def _add_spec_args(p: argparse.ArgumentParser, schema_flags=False) -> None:
    p.add_argument("--config", help="YAML/JSON config file")
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--seed", type=int)
    if schema_flags:
        p.add_argument("--nc", type=int, help="number of classes")
        p.add_argument("--maxnref", type=int, help="max references per class")
        p.add_argument("--basesize", type=int, help="instance base size, bytes")
        p.add_argument("--no", type=int, help="number of objects")
        p.add_argument("--nreft", type=int, help="number of reference types")
        p.add_argument("--clocref", type=int, help="class reference locality")
        p.add_argument("--olocref", type=int, help="object reference locality")
        p.add_argument("--size-profile", choices=("flat", "spread"),
                       dest="size_profile")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="driftbench")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a database file")
    _add_spec_args(p, schema_flags=True)
    p.add_argument("--out", required=True, help="database file path")

    p = sub.add_parser("trace", help="generate an access trace file")
    _add_spec_args(p, schema_flags=True)
    p.add_argument("--db", help="load this database instead of generating")
    p.add_argument("--h", type=float, default=1.0, dest="h_rate",
                   help="rate of access pattern change")
    p.add_argument("--transactions", type=int)
    p.add_argument("--out", required=True, help="trace file path")

    p = sub.add_parser("run", help="run a single (h, clusterer) cell")
    _add_spec_args(p, schema_flags=True)
    p.add_argument("--h", type=float, default=1.0, dest="h_rate")
    p.add_argument("--clusterer", choices=_CLUSTERER_CHOICES, default="nc")
    p.add_argument("--transactions", type=int)
    p.add_argument("--out", help="metrics CSV path (default: stdout)")

    p = sub.add_parser("sweep", help="run a full experiment sweep")
    _add_spec_args(p, schema_flags=True)
    p.add_argument("--transactions", type=int)
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.add_argument("--figure", help="also render a PNG figure here")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("report", help="re-render a metrics CSV")
    p.add_argument("--in", dest="infile", required=True, help="metrics CSV")
    p.add_argument("--format", choices=("csv", "table", "plotdata"),
                   default="table")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--figure", help="also render a PNG figure here")
    return ap


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    spec = _spec_from_args(args)
    db = build_database(spec.schema, spec.seed, size_profile=spec.size_profile)
    save_database(db, args.out)
    print(f"wrote {len(db.objects)} objects over {len(db.classes)} classes "
          f"to {args.out}")
    return 0


def cmd_trace(args) -> int:
    spec = _spec_from_args(args)
    if args.db:
        db = load_database(args.db)
    else:
        db = build_database(spec.schema, spec.seed,
                            size_profile=spec.size_profile)
    trace = generate_trace(db, spec, args.h_rate)
    write_trace(trace, args.out)
    print(f"wrote {len(trace)} transactions to {args.out}")
    return 0


def cmd_run(args) -> int:
    spec = _spec_from_args(args)
    spec.h_values = [args.h_rate]
    spec.clusterers = [args.clusterer]
    result = run_experiment(spec)
    _emit(report(result, "csv"), args.out)
    return 0


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)

    def progress(row):
        if not args.quiet:
            print(f"h={row['H']:<12g} {row['clusterer']:<5} "
                  f"total_io={row['total_io']}")

    result = run_experiment(spec, progress=progress)
    _emit(report(result, "csv"), args.out)
    if args.figure:
        from .figures import render_sweep_figure
        render_sweep_figure(result.rows, args.figure, title=spec.name)
        print(f"figure: {args.figure}")
    print(f"metrics: {args.out}")
    return 0


def cmd_report(args) -> int:
    with open(args.infile) as f:
        rows = rows_from_csv(f.read())
    result = SweepResult(spec_name=args.infile, seed=0, config_hash="",
                         rows=rows)
    _emit(report(result, args.format), args.out)
    if args.figure:
        from .figures import render_sweep_figure
        render_sweep_figure(rows, args.figure)
        print(f"figure: {args.figure}", file=sys.stderr)
    return 0


_COMMANDS = {"gen": cmd_gen, "trace": cmd_trace, "run": cmd_run,
             "sweep": cmd_sweep, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DriftbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
