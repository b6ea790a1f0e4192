"""
relaydual - uplink/downlink duality lab for compression-based relay networks

Minimum sum-power solvers for both link directions of a cloud radio access
network with capacity-limited fronthaul, plus executable duality checks.
"""

__version__ = "0.3.0"
__author__ = "relaydual developers"
__url__ = "https://github.com/relaydual/relaydual"

__all__ = [
    "__version__",
    "__author__",
    "__url__",
]
