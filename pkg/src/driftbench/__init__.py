"""driftbench: workload-dynamics evaluation for paged object stores.

Generate an object database, drive access traces whose pattern changes over
time at a controlled rate H, and replay them through a buffered page
simulator under pluggable dynamic clustering policies.
"""

from .clustering import ClustererConfig, make_clusterer
from .database import Database, SchemaParams, build_database, load_database, save_database
from .errors import DriftbenchError
from .harness import (ExperimentSpec, SweepResult, generate_trace, preset,
                      report, run_experiment)
from .protocols import DependencyConfig, RegionalConfig, RootSelector, change_interval
from .storage import SimConfig, SimMetrics, place_sequential, run_trace
from .workload import AccessRecord, OpKind, WorkloadParams, execute, read_trace, write_trace

__all__ = [
    "AccessRecord", "ClustererConfig", "Database", "DependencyConfig",
    "DriftbenchError", "ExperimentSpec", "OpKind", "RegionalConfig",
    "RootSelector", "SchemaParams", "SimConfig", "SimMetrics", "SweepResult",
    "WorkloadParams", "build_database", "change_interval", "execute",
    "generate_trace", "load_database", "make_clusterer", "place_sequential",
    "preset", "read_trace", "report", "run_experiment", "run_trace",
    "save_database", "write_trace",
]

__version__ = "0.1.0"
