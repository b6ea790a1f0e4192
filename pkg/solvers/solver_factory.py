"""
Registry of downlink solvers by strategy case
"""

from typing import Callable, Dict, List, Optional

from core.channel_model import Case, NetworkInstance, RateTargets, StrategyConfig
from core.errors import ConfigurationError

from .barrier import BarrierSettings


class DownlinkSolverFactory:
    """Maps each case to the downlink solver that handles it"""

    _solvers: Dict[Case, Callable] = {}
    # solvers that take barrier settings
    _uses_barrier: Dict[Case, bool] = {}

    @classmethod
    def register_solver(cls, case: Case, solver: Callable, uses_barrier: bool = False):
        """
        Register a solver for a case

        Args:
            case: Strategy case
            solver: Callable (instance, targets, beamformers, config[, barrier_settings])
            uses_barrier: Whether the solver accepts barrier settings
        """
        cls._solvers[Case.parse(case)] = solver
        cls._uses_barrier[Case.parse(case)] = uses_barrier

    @classmethod
    def get_available_cases(cls) -> List[Case]:
        return sorted(cls._solvers.keys(), key=lambda c: list(Case).index(c))

    @classmethod
    def get_solver(cls, case: Case) -> Callable:
        case = Case.parse(case)
        if case not in cls._solvers:
            available = ", ".join(c.value for c in cls.get_available_cases())
            raise ConfigurationError(
                f"No downlink solver for case '{case.value}'. Available: {available}"
            )
        return cls._solvers[case]

    @classmethod
    def solve(
        cls,
        instance: NetworkInstance,
        targets: RateTargets,
        beamformers,
        config: StrategyConfig,
        barrier_settings: Optional[BarrierSettings] = None,
    ):
        solver = cls.get_solver(config.case)
        if cls._uses_barrier[config.case]:
            return solver(instance, targets, beamformers, config, barrier_settings)
        return solver(instance, targets, beamformers, config)
