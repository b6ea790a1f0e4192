"""
Duality, tightness and interference-function checks.
"""

from .duality_verifier import (
    DualityReport,
    DualityTolerances,
    check_interference_properties,
    check_tightness,
    check_wz_chain_rule,
    find_rate_boundary,
    check_uniqueness,
    save_report,
    verify_duality,
)

__all__ = [
    "DualityReport",
    "DualityTolerances",
    "check_interference_properties",
    "check_tightness",
    "check_wz_chain_rule",
    "find_rate_boundary",
    "check_uniqueness",
    "save_report",
    "verify_duality",
]
