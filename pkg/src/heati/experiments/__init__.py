"""Config-driven experiment runs and the command-line interface."""

from .config import CHEMISTRY, CLUSTER, RunConfig, load_config, parse_config
from .results import COLUMNS, SCHEMA_VERSION, ResultRecord, emit_results, read_results
from .runner import InputFileError, run_chemistry_experiment, run_cluster_experiment, run_experiment

__all__ = [
    "CHEMISTRY", "CLUSTER", "COLUMNS", "SCHEMA_VERSION", "InputFileError", "ResultRecord", "RunConfig",
    "emit_results", "load_config", "parse_config", "read_results", "run_chemistry_experiment",
    "run_cluster_experiment", "run_experiment",
]
