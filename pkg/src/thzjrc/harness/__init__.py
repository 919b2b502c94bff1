"""Configurable Monte Carlo experiments over the waveform, channel and receiver modules."""

from .config import SCENARIOS, ConfigError, ExperimentConfig, load_config, validate_config
from .results import COLUMNS, ResultRow, emit, read_rows
from .runner import run

__all__ = [
    "SCENARIOS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "validate_config",
    "ResultRow",
    "COLUMNS",
    "emit",
    "read_rows",
    "run",
]
