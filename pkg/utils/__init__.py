"""
Configuration and run logging helpers.
"""

from .config_utils import (
    get_barrier_settings,
    get_run_logger_config,
    get_solver_settings,
    get_tolerances,
    load_config,
    setup_logging,
)
from .run_logger import SolverRunLogger, get_run_logger

__all__ = [
    "get_barrier_settings",
    "get_run_logger_config",
    "get_solver_settings",
    "get_tolerances",
    "load_config",
    "setup_logging",
    "SolverRunLogger",
    "get_run_logger",
]
