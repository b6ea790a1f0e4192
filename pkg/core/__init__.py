"""
Core models: Hermitian kernels, network instances and rate formulas.
"""

from .channel_model import (
    Case,
    FronthaulMode,
    NetworkInstance,
    RateTargets,
    StrategyConfig,
    UserMode,
    generate_rayleigh,
    load_instance,
    save_instance,
    validate,
)
from .hermitian_core import HermitianMatrix
from .rate_functions import DownlinkPoint, UplinkPoint, sum_powers

__all__ = [
    "Case",
    "FronthaulMode",
    "UserMode",
    "NetworkInstance",
    "RateTargets",
    "StrategyConfig",
    "generate_rayleigh",
    "load_instance",
    "save_instance",
    "validate",
    "HermitianMatrix",
    "UplinkPoint",
    "DownlinkPoint",
    "sum_powers",
]
