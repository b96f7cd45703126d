"""Python interface to the qrelay simulator.

The heavy lifting lives in the compiled ``qrelay._core`` extension; this
package re-exports it and unwraps the JSON-string entry points into dicts.
"""

import json as _json

from ._core import (
    ConfigError,
    Hop,
    InsufficientDataError,
    MetricsSummary,
    NoCompletionError,
    NoProgressError,
    QubitRecord,
    RunResult,
    SimConfig,
    __version__,
    latency_slots,
    link_correction_table,
    merge,
    normalize_sweep,
    replication_seed,
    run,
    steady_throughput,
    summarize,
    teleport_check,
    teleport_correction_table,
    transfer_time_stats,
)
from ._core import oracle_suite_json as _oracle_suite_json
from ._core import run_experiment_json as _run_experiment_json


def oracle_suite():
    """Run the statevector verification suite; returns the report as a dict."""
    return _json.loads(_oracle_suite_json())


def run_experiment(spec):
    """Run a full experiment from a flat spec dict (same keys as the CLI
    config file); returns a dict with the echoed spec, files written, and
    per-(protocol, M) summaries."""
    return _json.loads(_run_experiment_json(_json.dumps(spec)))


def summary_dict(summary):
    """MetricsSummary -> plain dict in the summary schema."""
    return _json.loads(summary.to_json())


__all__ = [
    "ConfigError",
    "Hop",
    "InsufficientDataError",
    "MetricsSummary",
    "NoCompletionError",
    "NoProgressError",
    "QubitRecord",
    "RunResult",
    "SimConfig",
    "__version__",
    "latency_slots",
    "link_correction_table",
    "merge",
    "normalize_sweep",
    "oracle_suite",
    "replication_seed",
    "run",
    "run_experiment",
    "steady_throughput",
    "summarize",
    "summary_dict",
    "teleport_check",
    "teleport_correction_table",
    "transfer_time_stats",
]
