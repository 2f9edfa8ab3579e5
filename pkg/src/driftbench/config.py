"""Config file loading.

Config files are YAML (or JSON, which YAML subsumes) with one section per
module.  Keys use the standard parameter names and are case-insensitive;
dashes and underscores are interchangeable (``HIGHEST-PROB-W`` and
``highest_prob_w`` are the same key).  A config may start from a preset via
``experiment.preset`` and override any subset of values.
"""

from __future__ import annotations

import yaml

from .clustering import ClustererConfig
from .errors import ConfigError
from .harness import ExperimentSpec, preset
from .protocols import DependencyConfig, RegionalConfig
from .storage import SimConfig
from .workload import OpKind, WorkloadParams


def _norm(key) -> str:
    # YAML 1.1 reads bare NO/YES/ON/OFF keys as booleans; map them back.
    if isinstance(key, bool):
        return "no" if not key else "yes"
    return str(key).strip().lower().replace("-", "_")


def _normalize(obj):
    if isinstance(obj, dict):
        return {_norm(k): _normalize(v) for k, v in obj.items()}
    return obj


def _apply(target, section: dict,
           renames: dict[str, str] | None = None) -> None:
    renames = renames or {}
    for key, value in section.items():
        attr = renames.get(key, key)
        if not hasattr(target, attr):
            raise ConfigError(f"unknown config key {key!r} "
                              f"for {type(target).__name__}")
        setattr(target, attr, value)


def load_config(path: str) -> ExperimentSpec:
    with open(path) as f:
        raw = yaml.safe_load(f)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return spec_from_dict(_normalize(raw))


def spec_from_dict(cfg: dict) -> ExperimentSpec:
    exp = dict(cfg.get("experiment", {}))
    base = exp.pop("preset", None)
    spec = preset(base) if base else ExperimentSpec()

    if "database" in cfg:
        db = dict(cfg["database"])
        spec.size_profile = db.pop("size_profile", spec.size_profile)
        _apply(spec.schema, db)
        # re-derive window defaults when only nc/no were given
        if "clocref" not in db:
            spec.schema.clocref = min(spec.schema.clocref, spec.schema.nc)
        if "olocref" not in db:
            spec.schema.olocref = min(spec.schema.olocref, spec.schema.no)

    if "workload" in cfg:
        wl = dict(cfg["workload"])
        if spec.workload is None:
            spec.workload = WorkloadParams()
        kind = wl.pop("op", wl.pop("op_kind", None))
        if kind is not None:
            spec.workload.op_kind = OpKind(kind)
        _apply(spec.workload, wl)

    if "regional" in cfg:
        reg = dict(cfg["regional"])
        if spec.regional is None:
            spec.regional = RegionalConfig()
        hr_size = reg.pop("hr_size", None)
        if hr_size is not None:
            spec.regional.n_regions = max(1, round(1.0 / hr_size))
        _apply(spec.regional, reg,
               renames={"object_assign_method": "assign_method"})

    if "dependency" in cfg:
        dep = dict(cfg["dependency"])
        if spec.dependency is None:
            spec.dependency = DependencyConfig()
        spec.integration = dep.pop("integration", spec.integration)
        spec.phase1_hot_fraction = dep.pop("hot_fraction",
                                           spec.phase1_hot_fraction)
        spec.phase1_hot_prob = dep.pop("hot_prob", spec.phase1_hot_prob)
        _apply(spec.dependency, dep)

    if "sim" in cfg:
        _apply(spec.sim, dict(cfg["sim"]))

    if "clustering" in cfg:
        for kind, knobs in dict(cfg["clustering"]).items():
            cc = ClustererConfig(kind=kind)
            _apply(cc, dict(knobs or {}))
            spec.clusterer_overrides[kind] = cc

    if exp:
        _apply(spec, exp)
    spec.validate()
    return spec
