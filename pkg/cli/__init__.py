"""
Command line front end: sweeps, single-instance verification, instance generation.
"""

from .main_cli import main
from .sweep_runner import (
    SweepConfig,
    SweepRow,
    SweepTable,
    emit_csv,
    load_sweep_config,
    parse_csv,
    run_sweep,
)

__all__ = [
    "main",
    "SweepConfig",
    "SweepRow",
    "SweepTable",
    "emit_csv",
    "load_sweep_config",
    "parse_csv",
    "run_sweep",
]
