"""Configuration, orchestration, comparison and reporting."""

from .compare import ComparisonReport, compare, compare_tables
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .io import SchemaError, read_trajectory, write_trajectory
from .report import bundle_reports
from .run import RunOutput, run, run_dos, run_spectral

__all__ = ["ComparisonReport", "ConfigError", "ExperimentConfig", "RunOutput", "SchemaError", "bundle_reports",
           "compare", "compare_tables", "load_config", "parse_config", "read_trajectory", "run", "run_dos",
           "run_spectral", "write_trajectory"]
