"""
Path-following log-barrier method for small dense problems of the form

    minimize    c^T x
    subject to  A x + b >= 0                 (scalar constraints)
                F_j(x) = F_j0 + sum_i x_i F_ji  is PSD  (Hermitian LMIs)

with a phase-I routine for a strictly feasible start.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from core.errors import ConfigurationError, InfeasibleError


class BarrierStatus(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    STOPPED = "stopped"


@dataclass(frozen=True)
class BarrierSettings:
    initial_t: float = 1.0
    t_multiplier: float = 10.0
    newton_tol: float = 1e-10  # on lambda^2 / 2
    stall_tol: float = 1e-6  # accepted once the decrement stops shrinking
    stall_steps: int = 3
    line_search_alpha: float = 0.25
    line_search_beta: float = 0.5
    gap_tol: float = 1e-8  # relative to 1 + |objective|
    max_newton_steps: int = 500  # per centering stage
    max_outer_stages: int = 60
    phase_one_bound: float = 1e9  # cap on the power-like coordinates during phase I

    def __post_init__(self):
        if self.initial_t <= 0 or self.t_multiplier <= 1:
            raise ConfigurationError("Barrier parameter must start positive and grow")
        if not 0 < self.line_search_alpha < 0.5 or not 0 < self.line_search_beta < 1:
            raise ConfigurationError("Backtracking needs alpha in (0, 0.5), beta in (0, 1)")
        if self.gap_tol <= 0 or self.newton_tol <= 0 or self.phase_one_bound <= 0:
            raise ConfigurationError("Barrier tolerances must be positive")
        if self.stall_tol < self.newton_tol or self.stall_steps < 1:
            raise ConfigurationError("stall_tol must be >= newton_tol and stall_steps >= 1")

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "BarrierSettings":
        defaults = cls()
        kwargs = {}
        for name, current in defaults.__dict__.items():
            if name in values:
                kwargs[name] = type(current)(float(values[name]))
        return cls(**kwargs)


@dataclass
class LinearMatrixInequality:
    """F(x) = constant + sum_i x_i coefficients[i], required PSD"""

    constant: np.ndarray  # d x d
    coefficients: np.ndarray  # n x d x d

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.constant + np.tensordot(x, self.coefficients, axes=1)

    def augmented(self, extra: np.ndarray) -> "LinearMatrixInequality":
        """Append one variable with coefficient matrix `extra`"""
        return LinearMatrixInequality(
            self.constant, np.concatenate([self.coefficients, extra[None]], axis=0)
        )


@dataclass
class BarrierProblem:
    objective: np.ndarray
    scalar_matrix: np.ndarray  # s x n
    scalar_offset: np.ndarray  # s
    lmis: List[LinearMatrixInequality] = field(default_factory=list)

    @property
    def num_variables(self) -> int:
        return self.objective.shape[0]

    @property
    def constraint_weight(self) -> int:
        """Barrier parameter of the constraint set: m/t bounds the duality gap"""
        return self.scalar_offset.shape[0] + sum(lmi.size for lmi in self.lmis)

    def scalar_slacks(self, x: np.ndarray) -> np.ndarray:
        return self.scalar_matrix @ x + self.scalar_offset

    def _factor(self, x: np.ndarray):
        """Slacks and Cholesky factors, or None when x is not strictly feasible"""
        slacks = self.scalar_slacks(x)
        if np.any(slacks <= 0) or not np.all(np.isfinite(slacks)):
            return None
        factors = []
        for lmi in self.lmis:
            try:
                factors.append(scipy.linalg.cho_factor(lmi.evaluate(x), lower=True))
            except (np.linalg.LinAlgError, ValueError):
                return None
        return slacks, factors

    def is_strictly_feasible(self, x: np.ndarray) -> bool:
        return self._factor(x) is not None

    def barrier(self, x: np.ndarray) -> float:
        factored = self._factor(x)
        if factored is None:
            return np.inf
        slacks, factors = factored
        value = -np.sum(np.log(slacks))
        for c, _ in factors:
            value -= 2.0 * np.sum(np.log(np.abs(c.diagonal().real)))
        return float(value)

    def derivatives(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Gradient and Hessian of the barrier at a strictly feasible x"""
        slacks, factors = self._factor(x)
        scaled = self.scalar_matrix / slacks[:, None]
        gradient = -np.sum(scaled, axis=0)
        hessian = scaled.T @ scaled
        for lmi, factor in zip(self.lmis, factors):
            inverse = scipy.linalg.cho_solve(factor, np.eye(lmi.size, dtype=complex))
            products = np.einsum("ab,ibc->iac", inverse, lmi.coefficients)
            gradient -= np.einsum("iaa->i", products).real
            hessian += np.einsum("iab,jba->ij", products, products).real
        return gradient, hessian

    def dual_matrices(self, x: np.ndarray, t: float) -> List[np.ndarray]:
        """Central-path estimates F_j(x)^{-1} / t of the LMI multipliers"""
        result = []
        for lmi in self.lmis:
            inverse = np.linalg.inv(lmi.evaluate(x)) / t
            result.append(0.5 * (inverse + inverse.conj().T))
        return result


@dataclass
class BarrierResult:
    x: np.ndarray
    t: float
    objective: float
    status: BarrierStatus
    newton_steps: int
    stages: int


class LogBarrierSolver:
    """Newton centering with backtracking, barrier parameter grown geometrically"""

    def __init__(self, settings: Optional[BarrierSettings] = None):
        self.settings = settings or BarrierSettings()
        self.logger = logging.getLogger(f"{__name__}.LogBarrierSolver")

    def _newton_direction(self, gradient, hessian) -> np.ndarray:
        try:
            return -scipy.linalg.solve(hessian, gradient, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            return -np.linalg.lstsq(hessian, gradient, rcond=None)[0]

    def _center(self, problem, x, t, stop_when):
        """Minimize t c^T x + phi(x); returns (x, steps, centered, stopped)"""
        s = self.settings
        value = t * problem.objective @ x + problem.barrier(x)
        best_decrement = np.inf
        stalled = 0
        for step in range(1, s.max_newton_steps + 1):
            gradient, hessian = problem.derivatives(x)
            gradient = gradient + t * problem.objective
            direction = self._newton_direction(gradient, hessian)
            decrement = -float(gradient @ direction)
            if decrement / 2.0 <= s.newton_tol:
                return x, step, True, False
            # at large t the decrement bottoms out at the rounding floor of the Hessian solve
            if decrement < 0.5 * best_decrement:
                best_decrement = decrement
                stalled = 0
            else:
                stalled += 1
            if stalled >= s.stall_steps and decrement / 2.0 <= s.stall_tol:
                self.logger.debug(
                    "Centering stalled at t=%.3g with decrement %.3e after %d steps", t, decrement, step
                )
                return x, step, True, False
            size = 1.0
            while True:
                candidate = x + size * direction
                candidate_value = t * problem.objective @ candidate + problem.barrier(candidate)
                if candidate_value <= value - s.line_search_alpha * size * decrement:
                    break
                size *= s.line_search_beta
                if size < 1e-14:
                    # no representable progress left at this t
                    return x, step, True, False
            x, value = candidate, candidate_value
            if stop_when is not None and stop_when(x):
                return x, step, True, True
        return x, s.max_newton_steps, False, False

    def minimize(
        self,
        problem: BarrierProblem,
        x0: np.ndarray,
        stop_when: Optional[Callable[[np.ndarray], bool]] = None,
        t0: Optional[float] = None,
    ) -> BarrierResult:
        if not problem.is_strictly_feasible(x0):
            raise ValueError("Barrier start point must be strictly feasible")
        s = self.settings
        x = np.array(x0, dtype=float)
        t = s.initial_t if t0 is None else t0
        total_steps = 0
        for stage in range(1, s.max_outer_stages + 1):
            x, steps, centered, stopped = self._center(problem, x, t, stop_when)
            total_steps += steps
            objective = float(problem.objective @ x)
            if stopped:
                return BarrierResult(x, t, objective, BarrierStatus.STOPPED, total_steps, stage)
            if not centered:
                self.logger.info("Centering did not converge at t=%.3g", t)
                return BarrierResult(x, t, objective, BarrierStatus.MAX_ITER, total_steps, stage)
            gap = problem.constraint_weight / t
            self.logger.debug("stage %d: t=%.3g objective=%.10g gap=%.3g", stage, t, objective, gap)
            if gap <= s.gap_tol * (1.0 + abs(objective)):
                return BarrierResult(x, t, objective, BarrierStatus.OPTIMAL, total_steps, stage)
            if stop_when is not None and stop_when(x):
                return BarrierResult(x, t, objective, BarrierStatus.STOPPED, total_steps, stage)
            t *= s.t_multiplier
        return BarrierResult(
            x, t, float(problem.objective @ x), BarrierStatus.MAX_ITER, total_steps, s.max_outer_stages
        )

    def find_strictly_feasible(
        self, problem: BarrierProblem, x0: np.ndarray, bound_weights: np.ndarray
    ) -> np.ndarray:
        """
        Phase I: minimize s over (x, s) with every slack shifted by s and
        bound_weights . x <= phase_one_bound. Stops as soon as s < 0.
        """
        n = problem.num_variables
        bound = self.settings.phase_one_bound
        x0 = np.asarray(x0, dtype=float)
        if bound_weights @ x0 >= bound:
            raise ValueError("Phase-I start violates the power bound")
        if problem.is_strictly_feasible(x0):
            return x0

        worst = -float(np.min(problem.scalar_slacks(x0), initial=np.inf))
        for lmi in problem.lmis:
            worst = max(worst, -float(scipy.linalg.eigvalsh(lmi.evaluate(x0))[0]))
        shift = max(worst, 0.0) + 1.0

        scalar_matrix = np.hstack([problem.scalar_matrix, np.ones((problem.scalar_matrix.shape[0], 1))])
        scalar_matrix = np.vstack([scalar_matrix, np.append(-bound_weights, 0.0)])
        scalar_offset = np.append(problem.scalar_offset, bound)
        lmis = [lmi.augmented(np.eye(lmi.size, dtype=complex)) for lmi in problem.lmis]
        objective = np.zeros(n + 1)
        objective[-1] = 1.0
        phase_one = BarrierProblem(objective, scalar_matrix, scalar_offset, lmis)

        result = self.minimize(phase_one, np.append(x0, shift), stop_when=lambda z: z[-1] < 0.0)
        x, level = result.x[:n], result.x[-1]
        if level < 0.0 and problem.is_strictly_feasible(x):
            self.logger.debug("Phase I found a strictly feasible point after %d Newton steps", result.newton_steps)
            return x
        raise InfeasibleError(
            f"Phase I ended with minimum slack violation {level:.3e} ({result.status.value})"
        )
