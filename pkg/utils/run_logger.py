"""
JSONL run log of sweep grid points
"""

import json
import math
import os
import threading
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from .config_utils import DEFAULT_CONFIG_PATH, get_run_logger_config, load_config


class SolverRunLogger:
    """Appends one JSON line per solved grid point"""

    def __init__(self, settings: Optional[Dict[str, Any]] = None):
        """
        Args:
            settings: The `run_logger` section (see config_utils.get_run_logger_config)
        """
        self.settings = settings or get_run_logger_config()
        self.enabled = bool(self.settings.get("enabled", False))
        self.log_file: Optional[str] = None
        self._lock = threading.Lock()
        if self.enabled:
            self._setup_log_file()

    def _setup_log_file(self):
        log_dir = self.settings.get("log_directory", "logs/solver_runs")
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        pattern = self.settings.get("filename_pattern", "solver_runs_{timestamp}.jsonl")
        self.log_file = os.path.join(log_dir, pattern.format(timestamp=timestamp))

    def log_point(
        self,
        case: str,
        rate_target: float,
        status: str,
        ul_power: float = math.nan,
        dl_power: float = math.nan,
        **extra,
    ):
        """
        Record one grid point

        Args:
            case: Strategy case id
            rate_target: Symmetric rate target
            status: Row status
            ul_power: Uplink minimum sum power
            dl_power: Downlink minimum sum power
            **extra: Residuals, iterations, wall time
        """
        if not self.enabled:
            return
        entry = {
            "timestamp": datetime.now().isoformat(),
            "case": case,
            "rate_target": rate_target,
            "status": status,
            "ul_power": _json_number(ul_power),
            "dl_power": _json_number(dl_power),
        }
        if self.settings.get("log_level", "basic") == "detailed":
            entry.update({k: _json_number(v) for k, v in extra.items()})
        line = json.dumps(entry, ensure_ascii=False) + "\n"
        # sweep workers share one logger
        with self._lock, open(self.log_file, "a", encoding="utf-8") as f:
            f.write(line)


def _json_number(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


_run_loggers: Dict[str, SolverRunLogger] = {}
_run_loggers_lock = threading.Lock()


def get_run_logger(config_path: str = DEFAULT_CONFIG_PATH) -> SolverRunLogger:
    """Process-wide run logger for one project config file"""
    with _run_loggers_lock:
        if config_path not in _run_loggers:
            _run_loggers[config_path] = SolverRunLogger(
                get_run_logger_config(load_config(config_path))
            )
        return _run_loggers[config_path]
