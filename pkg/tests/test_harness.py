import math
import subprocess
import sys

import pytest

from driftbench.config import load_config, spec_from_dict
from driftbench.database import SchemaParams
from driftbench.errors import ConfigError, ParameterError
from driftbench.figures import render_sweep_figure
from driftbench.harness import (CSV_FIELDS, DEFAULT_H_VALUES, ExperimentSpec,
                                SweepResult, preset, report, rows_from_csv,
                                run_experiment)
from driftbench.protocols import RegionalConfig
from driftbench.storage import SimConfig
from driftbench.workload import OpKind


def tiny_spec(**kw):
    defaults = dict(
        schema=SchemaParams(nc=8, maxnref=3, no=2000), size_profile="spread",
        regional=RegionalConfig(n_regions=20),
        sim=SimConfig(buffer_pages=32), transactions=300,
        h_values=[0.01, 1.0], clusterers=["none", "dro"], seed=5)
    defaults.update(kw)
    return ExperimentSpec(**defaults)


# Literal expectations for every preset, asserted value by value.
PRESET_TABLE = {
    "fig2a": dict(protocol="moving_window", n_regions=334, highest=0.80,
                  lowest=0.0006, incr=0.02, assign="random", dep=None),
    "fig2b": dict(protocol="gradual_moving_window", n_regions=334,
                  highest=0.80, lowest=0.0006, incr=0.02, assign="random",
                  dep=None),
    "fig3a": dict(protocol="moving_window", n_regions=334, highest=0.80,
                  lowest=0.0006, incr=0.02, assign="random",
                  dep=dict(sref=1.0, r=1), hot=(0.03, 0.80)),
    "fig3b": dict(protocol="gradual_moving_window", n_regions=334,
                  highest=0.80, lowest=0.0006, incr=0.02, assign="random",
                  dep=dict(sref=1.0, r=1), hot=(0.03, 0.80)),
    "fig5_workload": dict(protocol="moving_window", n_regions=20,
                          highest=0.80, lowest=0.0006, incr=0.02,
                          assign="random", dep=dict(traversed=1.0, c=1.0, r=1),
                          hot=(0.01, 0.99)),
}


class TestPresets:
    @pytest.mark.parametrize("name", sorted(PRESET_TABLE))
    def test_fidelity(self, name):
        spec = preset(name)
        want = PRESET_TABLE[name]
        assert spec.regional.protocol == want["protocol"]
        assert spec.regional.n_regions == want["n_regions"]
        assert spec.regional.highest_prob_w == want["highest"]
        assert spec.regional.lowest_prob_w == want["lowest"]
        assert spec.regional.prob_w_incr_size == want["incr"]
        assert spec.regional.assign_method == want["assign"]
        if want["dep"] is None:
            assert spec.dependency is None
        else:
            dep = want["dep"]
            assert spec.integration
            assert spec.dependency.r == dep["r"]
            if "sref" in dep:
                assert spec.dependency.sref_dep_prob == dep["sref"]
            if "traversed" in dep:
                assert spec.dependency.traversed_dep_prob == dep["traversed"]
                assert spec.dependency.c == dep["c"]
            assert (spec.phase1_hot_fraction,
                    spec.phase1_hot_prob) == want["hot"]
        # shared experiment environment
        assert spec.schema.no == 100_000
        assert spec.schema.nc == 50
        assert spec.size_profile == "spread"
        assert spec.transactions == 10_000
        assert spec.workload.op_kind == OpKind.SIMPLE_TRAVERSAL
        assert spec.workload.depth == 2
        assert spec.sim.page_size == 4096
        assert spec.sim.buffer_pages == 1024  # 4 MB
        assert spec.sim.replacement == "lru"
        assert spec.h_values == DEFAULT_H_VALUES

    def test_unknown_preset(self):
        with pytest.raises(ParameterError):
            preset("fig9")


class TestRunExperiment:
    def test_rows_and_zero_clust_for_none(self):
        spec = tiny_spec(h_values=[1.0], clusterers=["none"])
        result = run_experiment(spec)
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row["clusterer"] == "nc"
        assert row["clust_read_io"] == row["clust_write_io"] == 0
        assert row["total_io"] == row["txn_read_io"]

    def test_one_row_per_cell(self):
        spec = tiny_spec()
        result = run_experiment(spec)
        keys = [(r["H"], r["clusterer"]) for r in result.rows]
        assert len(keys) == len(set(keys)) == 4

    def test_determinism(self):
        a = run_experiment(tiny_spec())
        b = run_experiment(tiny_spec())
        assert a.rows == b.rows
        assert a.config_hash == b.config_hash

    def test_validation(self):
        with pytest.raises(ParameterError):
            run_experiment(tiny_spec(h_values=[]))
        with pytest.raises(ParameterError):
            run_experiment(tiny_spec(transactions=0))

    def test_evolution_workload_runs(self):
        from driftbench.workload import WorkloadParams
        spec = tiny_spec(h_values=[1.0], clusterers=["none"],
                         workload=WorkloadParams(
                             op_kind=OpKind.DATABASE_EVOLUTION),
                         transactions=100)
        result = run_experiment(spec)
        assert result.rows[0]["total_io"] >= 0


@pytest.fixture(scope="module")
def result():
    return run_experiment(tiny_spec())


class TestReport:
    def test_csv_shape_and_roundtrip(self, result):
        text = report(result, "csv")
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(CSV_FIELDS)
        assert len(lines) == 1 + len(result.rows)
        assert rows_from_csv(text) == result.rows

    def test_table_sorted(self, result):
        lines = report(result, "table").strip().split("\n")
        body = [ln.split() for ln in lines[1:]]
        keys = [(row[2], float(row[0])) for row in body]
        assert keys == sorted(keys)

    def test_plotdata_log2_axis(self, result):
        lines = report(result, "plotdata").strip().split("\n")
        header = lines[0].split("\t")
        assert header[0] == "log2_h"
        assert set(header[1:]) == {"nc", "dro"}
        xs = [float(ln.split("\t")[0]) for ln in lines[1:]]
        assert xs == [math.log2(h) for h in sorted(tiny_spec().h_values)]

    def test_empty_and_unknown(self, result):
        with pytest.raises(ParameterError):
            report(SweepResult("x", 0, "", rows=[]), "csv")
        with pytest.raises(ParameterError):
            report(result, "xml")

    def test_figure_file(self, result, tmp_path):
        path = str(tmp_path / "sweep.png")
        render_sweep_figure(result.rows, path, title="tiny")
        data = open(path, "rb").read()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"


class TestConfigFile:
    def test_yaml_roundtrip(self, tmp_path):
        cfg = tmp_path / "exp.yaml"
        cfg.write_text("""
experiment:
  transactions: 123
  h-values: [0.5, 1.0]
  clusterers: [nc, gp]
  seed: 9
database:
  NC: 6
  MAXNREF: 2
  NO: 500
  size-profile: spread
workload:
  op: simple_traversal
  depth: 3
regional:
  protocol: gradual_moving_window
  HR-SIZE: 0.05
  HIGHEST-PROB-W: 0.9
  LOWEST-PROB-W: 0.001
  PROB-W-INCR-SIZE: 0.05
sim:
  buffer_pages: 16
clustering:
  gp:
    NRI: 5
""")
        spec = load_config(str(cfg))
        assert spec.transactions == 123
        assert spec.h_values == [0.5, 1.0]
        assert spec.seed == 9
        assert spec.schema.nc == 6 and spec.schema.no == 500
        assert spec.size_profile == "spread"
        assert spec.workload.depth == 3
        assert spec.regional.protocol == "gradual_moving_window"
        assert spec.regional.n_regions == 20
        assert spec.regional.highest_prob_w == 0.9
        assert spec.sim.buffer_pages == 16
        assert spec.clusterer_config("gp").nri == 5

    def test_preset_base_with_overrides(self):
        spec = spec_from_dict({
            "experiment": {"preset": "fig2a", "transactions": 50},
            "database": {"no": 1000, "nc": 5}})
        assert spec.regional.n_regions == 334
        assert spec.transactions == 50
        assert spec.schema.no == 1000

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            spec_from_dict({"sim": {"page_megabytes": 2}})


class TestCli:
    def run_cli(self, *args):
        return subprocess.run([sys.executable, "-m", "driftbench.cli", *args],
                              capture_output=True, text=True)

    def test_gen_trace_run_sweep_report(self, tmp_path):
        db = str(tmp_path / "db.txt")
        out = self.run_cli("gen", "--nc", "6", "--no", "400", "--seed", "3",
                           "--out", db)
        assert out.returncode == 0, out.stderr
        assert "400 objects" in out.stdout

        trace = str(tmp_path / "trace.txt")
        out = self.run_cli("trace", "--db", db, "--nc", "6", "--no", "400",
                           "--transactions", "20", "--h", "0.5",
                           "--out", trace)
        assert out.returncode == 0, out.stderr
        assert len(open(trace).readlines()) == 20

        cell = str(tmp_path / "cell.csv")
        out = self.run_cli("run", "--nc", "6", "--no", "400",
                           "--transactions", "20", "--h", "1.0",
                           "--clusterer", "dro", "--out", cell)
        assert out.returncode == 0, out.stderr
        rows = rows_from_csv(open(cell).read())
        assert len(rows) == 1 and rows[0]["clusterer"] == "dro"

        csvp = str(tmp_path / "sweep.csv")
        png = str(tmp_path / "sweep.png")
        out = self.run_cli("sweep", "--config", self._cfg(tmp_path),
                           "--out", csvp, "--figure", png, "--quiet")
        assert out.returncode == 0, out.stderr
        assert len(rows_from_csv(open(csvp).read())) == 4
        assert open(png, "rb").read()[:4] == b"\x89PNG"

        out = self.run_cli("report", "--in", csvp, "--format", "plotdata")
        assert out.returncode == 0, out.stderr
        assert out.stdout.startswith("log2_h\t")

    def _cfg(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("""
experiment:
  transactions: 30
  h-values: [0.5, 1.0]
  clusterers: [nc, prp]
database: {nc: 6, no: 400}
sim: {buffer_pages: 8}
""")
        return str(cfg)

    def test_bad_args_exit_code(self, tmp_path):
        out = self.run_cli("report", "--in", str(tmp_path / "nope.csv"))
        assert out.returncode != 0
