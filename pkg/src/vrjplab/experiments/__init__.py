"""Declarative experiment configs, seeded parallel execution, and reports."""

from .config import EXPERIMENT_NAMES, ExperimentConfig, RunRecord, StatRow, default_config
from .rng import aux_stream, resolve_seed, rng_streams, stream_fingerprint
from .runner import run_experiment
from .report import emit_report

__all__ = [
    "EXPERIMENT_NAMES",
    "ExperimentConfig",
    "RunRecord",
    "StatRow",
    "default_config",
    "rng_streams",
    "aux_stream",
    "resolve_seed",
    "stream_fingerprint",
    "run_experiment",
    "emit_report",
]
