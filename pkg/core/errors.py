"""
Exception hierarchy for relaydual
"""

from typing import Any, Optional, Sequence


class RelayDualError(Exception):
    """Base exception for all relaydual errors"""

    pass


class NotPositiveDefiniteError(RelayDualError):
    """Raised when a Hermitian matrix fails Cholesky factorization"""

    pass


class DimensionMismatchError(RelayDualError):
    """Raised when array shapes disagree with declared dimensions"""

    pass


class ConfigurationError(RelayDualError):
    """Raised for invalid instances, strategies or sweep configurations"""

    pass


class ParseError(ConfigurationError):
    """Raised when an instance or config file cannot be parsed"""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ):
        self.path = path
        self.line = line
        self.field = field
        location = []
        if path:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        prefix = ", ".join(location)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class InvalidPointError(RelayDualError):
    """Raised when an uplink or downlink operating point violates its invariants"""

    pass


class ZeroQuantizationNoiseError(RelayDualError):
    """Raised when a fronthaul rate is evaluated at zero quantization noise"""

    pass


class SingularConditioningBlockError(RelayDualError):
    """Raised when a multivariate-compression Schur denominator vanishes"""

    pass


class SolverError(RelayDualError):
    """Base exception for solver failures"""

    pass


class InfeasibleError(SolverError):
    """Raised when rate targets cannot be met under the fronthaul caps"""

    def __init__(self, message: str, uplink: Any = None, downlink: Any = None):
        super().__init__(message)
        self.uplink = uplink
        self.downlink = downlink


class IterationLimitError(SolverError):
    """Raised when a solver exhausts its iteration budget before converging"""

    def __init__(self, message: str, uplink: Any = None, downlink: Any = None):
        super().__init__(message)
        self.uplink = uplink
        self.downlink = downlink


class DegenerateRelayError(SolverError):
    """Raised when beamformers leave a relay without any signal"""

    def __init__(self, relays: Sequence[int]):
        self.relays = list(relays)
        super().__init__(
            f"Relays {self.relays} carry no beamformed signal; drop them first"
        )


class DualsUnavailableError(SolverError):
    """Raised when dual variables are requested from a non-optimal solution"""

    pass


class PropertyViolationError(RelayDualError):
    """Raised when an interference map breaks a standard-function property"""

    def __init__(self, prop: str, powers: Any, alpha: float, user: int):
        self.prop = prop
        self.powers = powers
        self.alpha = alpha
        self.user = user
        super().__init__(
            f"{prop} violated for user {user} at alpha={alpha}, p={powers}"
        )
