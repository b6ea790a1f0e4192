#!/usr/bin/env python3
"""
Terminal output for the relaydual CLI
"""

import math
import time

from verification.duality_verifier import DualityReport

from .sweep_runner import (
    STATUS_INFEASIBLE,
    STATUS_MISMATCH,
    STATUS_NEAR_BOUNDARY,
    STATUS_OK,
    SweepTable,
)


class Colors:
    """ANSI color codes for terminal styling"""

    OKBLUE = "\033[94m"
    OKCYAN = "\033[96m"
    OKGREEN = "\033[92m"
    WARNING = "\033[93m"
    FAIL = "\033[91m"
    ENDC = "\033[0m"
    BOLD = "\033[1m"

    CYAN = "\033[36m"
    YELLOW = "\033[33m"


_STATUS_COLORS = {
    STATUS_OK: Colors.OKGREEN,
    STATUS_INFEASIBLE: Colors.YELLOW,
    STATUS_NEAR_BOUNDARY: Colors.OKCYAN,
    STATUS_MISMATCH: Colors.FAIL,
}


def _fmt(value: float, spec: str = ".6g") -> str:
    if value is None or not math.isfinite(value):
        return "-"
    return format(value, spec)


class CLIInterface:
    """Colored status lines, report cards and sweep tables"""

    def __init__(self, use_color: bool = True):
        self.use_color = use_color

    def _c(self, color: str) -> str:
        return color if self.use_color else ""

    def print_separator(self, char: str = "═", length: int = 79, color: str = Colors.CYAN):
        print(f"{self._c(color)}{char * length}{self._c(Colors.ENDC)}")

    def print_status(self, message: str, status_type: str = "info"):
        """Print status message with appropriate styling"""
        status_styles = {
            "success": f"{self._c(Colors.OKGREEN)}✅",
            "error": f"{self._c(Colors.FAIL)}❌",
            "warning": f"{self._c(Colors.WARNING)}⚠️ ",
            "info": f"{self._c(Colors.OKBLUE)}ℹ️ ",
            "processing": f"{self._c(Colors.YELLOW)}⏳",
        }
        icon = status_styles.get(status_type, status_styles["info"])
        timestamp = time.strftime("%H:%M:%S")
        b, e = self._c(Colors.BOLD), self._c(Colors.ENDC)
        print(f"[{b}{timestamp}{e}] {icon} {b}{message}{e}")

    def print_error_box(self, title: str, error_msg: str):
        f, e = self._c(Colors.FAIL), self._c(Colors.ENDC)
        print(f"{f}┌─ {title} " + "─" * max(0, 74 - len(title)) + f"┐{e}")
        for line in str(error_msg).splitlines() or [""]:
            print(f"{f}│{e} {line}")
        print(f"{f}└" + "─" * 78 + f"┘{e}")

    def print_report(self, report: DualityReport):
        """Summary card of one duality report"""
        self.print_separator()
        b, e = self._c(Colors.BOLD), self._c(Colors.ENDC)
        print(f"{b}Case {report.case}{e}")
        if not report.feasible:
            print(
                f"  uplink feasible: {report.uplink_feasible}   "
                f"downlink feasible: {report.downlink_feasible}"
            )
        if not report.downlink_converged:
            print(f"  {self._c(Colors.WARNING)}downlink solver hit its iteration limit{e}")
        print(f"  P_ul = {_fmt(report.uplink_sum_power, '.10g')}")
        print(f"  P_dl = {_fmt(report.downlink_sum_power, '.10g')}")
        print(f"  relative gap        {_fmt(report.relative_gap, '.3e')}")
        print(f"  beta vs p_ul        {_fmt(report.beta_residual, '.3e')}")
        print(f"  lambda vs q_ul      {_fmt(report.quantization_dual_residual, '.3e')}")
        if math.isfinite(report.rank_ratio):
            print(f"  dual rank ratio     {_fmt(report.rank_ratio, '.3e')}")
            print(f"  fronthaul identity  {_fmt(report.dual_identity_residual, '.3e')}")
        for name, ok in report.checks.items():
            mark = f"{self._c(Colors.OKGREEN)}✅" if ok else f"{self._c(Colors.FAIL)}❌"
            print(f"  {mark} {name}{e}")
        if report.diagnostic:
            print(f"  {self._c(Colors.WARNING)}{report.diagnostic}{e}")
        self.print_separator()

    def print_sweep_summary(self, table: SweepTable):
        """One line per grid point, then counts by status"""
        b, e = self._c(Colors.BOLD), self._c(Colors.ENDC)
        print(f"{b}{'case':>4} {'rate':>6} {'P_ul':>14} {'P_dl':>14} {'gap':>10}  status{e}")
        counts = {}
        for row in table.rows:
            counts[row.status] = counts.get(row.status, 0) + 1
            color = self._c(_STATUS_COLORS.get(row.status, Colors.ENDC))
            print(
                f"{row.case:>4} {row.rate_target:>6.3g} {_fmt(row.ul_power, '.8g'):>14} "
                f"{_fmt(row.dl_power, '.8g'):>14} {_fmt(row.rel_gap, '.2e'):>10}  "
                f"{color}{row.status}{e}"
            )
        summary = ", ".join(f"{count} {status}" for status, count in sorted(counts.items()))
        print(f"{b}{len(table)} grid points: {summary}{e}")
