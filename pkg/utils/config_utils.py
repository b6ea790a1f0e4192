"""
Configuration loading for relaydual.

Every getter falls back to defaults when the file or a key is missing, so a
partial relaydual.config.yaml is always valid.
"""

import logging
import os
from typing import Any, Dict, Optional

import yaml

from solvers.barrier import BarrierSettings
from solvers.uplink_solver import SolverSettings
from verification.duality_verifier import DualityTolerances

DEFAULT_CONFIG_PATH = "relaydual.config.yaml"

DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(__name__)


def load_config(config_path: str = DEFAULT_CONFIG_PATH) -> Dict[str, Any]:
    """
    Load the project configuration file.

    Args:
        config_path: Path to the YAML configuration file

    Returns:
        Parsed configuration, or an empty dict when unavailable
    """
    try:
        if os.path.exists(config_path):
            with open(config_path, "r", encoding="utf-8") as f:
                config = yaml.safe_load(f)
            return config if isinstance(config, dict) else {}
        logger.debug("Config file %s not found, using defaults", config_path)
    except (OSError, yaml.YAMLError) as e:
        logger.warning("Error reading config from %s: %s; using defaults", config_path, e)
    return {}


def _section(config: Optional[Dict[str, Any]], name: str) -> Dict[str, Any]:
    section = (config or {}).get(name) or {}
    return section if isinstance(section, dict) else {}


def get_solver_settings(config: Optional[Dict[str, Any]] = None) -> SolverSettings:
    return SolverSettings.from_dict(_section(config, "solver"))


def get_barrier_settings(config: Optional[Dict[str, Any]] = None) -> BarrierSettings:
    return BarrierSettings.from_dict(_section(config, "barrier"))


def get_tolerances(config: Optional[Dict[str, Any]] = None) -> DualityTolerances:
    return DualityTolerances.from_dict(_section(config, "tolerances"))


def get_run_logger_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    section = _section(config, "run_logger")
    return {
        "enabled": bool(section.get("enabled", False)),
        "log_directory": section.get("log_directory", "logs/solver_runs"),
        "filename_pattern": section.get("filename_pattern", "solver_runs_{timestamp}.jsonl"),
        "log_level": section.get("log_level", "basic"),
    }


def setup_logging(config: Optional[Dict[str, Any]] = None, verbose: bool = False) -> None:
    """Configure the root logger from the `logging` section"""
    section = _section(config, "logging")
    level_name = "DEBUG" if verbose else str(section.get("level", "WARNING")).upper()
    level = getattr(logging, level_name, logging.WARNING)
    formatter = logging.Formatter(section.get("format", DEFAULT_LOG_FORMAT))

    root = logging.getLogger()
    root.setLevel(level)
    root.handlers.clear()

    handler = logging.StreamHandler()
    handler.setFormatter(formatter)
    root.addHandler(handler)

    log_file = section.get("file")
    if log_file:
        os.makedirs(os.path.dirname(log_file) or ".", exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)
