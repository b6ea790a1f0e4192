"""
Uplink fixed-point and downlink LP / barrier solvers.
"""

from .barrier import BarrierSettings, LogBarrierSolver
from .downlink_solver import (
    DownlinkSolution,
    DownlinkStatus,
    DualVariables,
    extract_duals,
    solve_downlink_via_duality,
    solve_in_tight_linear,
    solve_mv_barrier,
)
from .solver_factory import DownlinkSolverFactory
from .uplink_solver import SolverSettings, UplinkSolution, fixed_point_solve

__all__ = [
    "BarrierSettings",
    "LogBarrierSolver",
    "DownlinkSolution",
    "DownlinkStatus",
    "DualVariables",
    "extract_duals",
    "solve_downlink_via_duality",
    "solve_in_tight_linear",
    "solve_mv_barrier",
    "DownlinkSolverFactory",
    "SolverSettings",
    "UplinkSolution",
    "fixed_point_solve",
]
