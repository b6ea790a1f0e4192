"""
Downlink sum-power minimization at fixed transmit beamformers.

Cases I-II are linear programs whose constraints are all active at the
optimum, so the optimum solves a square linear system. Cases III-IV carry a
full quantization covariance Q and are solved with the log-barrier method.

Both formulations use the objective sigma^2 (sum_k p_k + tr Q), so rate
duals are directly comparable with uplink powers and fronthaul duals with
uplink quantization noises.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from core.channel_model import (
    Case,
    FronthaulMode,
    NetworkInstance,
    RateTargets,
    StrategyConfig,
    validate,
)
from core.errors import (
    ConfigurationError,
    DegenerateRelayError,
    DimensionMismatchError,
    DualsUnavailableError,
    InfeasibleError,
    IterationLimitError,
    ZeroQuantizationNoiseError,
)
from core.hermitian_core import HermitianMatrix
from core.rate_functions import (
    DownlinkPoint,
    downlink_fronthaul_rates,
    downlink_user_rates,
    interference_mask,
    sum_powers,
)

from .barrier import (
    BarrierProblem,
    BarrierSettings,
    BarrierStatus,
    LinearMatrixInequality,
    LogBarrierSolver,
)
from .solver_factory import DownlinkSolverFactory
from .uplink_solver import SolverSettings, UplinkSolution, fixed_point_solve

logger = logging.getLogger(__name__)

NEGATIVE_TOLERANCE = 1e-9


class DownlinkStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"


@dataclass(frozen=True, eq=False)
class DualVariables:
    rate_duals: np.ndarray  # beta_k
    fronthaul_duals: Optional[np.ndarray] = None  # lambda_m, Cases I-II
    lmi_duals: Optional[np.ndarray] = None  # Lambda_m^{(m,m)}, Cases III-IV
    lmi_blocks: List[np.ndarray] = field(default_factory=list)  # full Lambda_m, relay first

    @property
    def quantization_duals(self) -> np.ndarray:
        return self.lmi_duals if self.lmi_duals is not None else self.fronthaul_duals


@dataclass(frozen=True, eq=False)
class DownlinkSolution:
    point: Optional[DownlinkPoint]
    achieved_rates: Optional[np.ndarray]
    achieved_fronthauls: Optional[np.ndarray]
    sum_power: float
    duals: Optional[DualVariables]
    status: DownlinkStatus
    diagnostic: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == DownlinkStatus.OPTIMAL


def _infeasible(diagnostic: str, status=DownlinkStatus.INFEASIBLE) -> DownlinkSolution:
    logger.info("Downlink %s: %s", status.value, diagnostic)
    return DownlinkSolution(None, None, None, math.nan, None, status, diagnostic)


def _check_inputs(instance, targets, beamformers, config, sdp: bool) -> np.ndarray:
    if config.case.uses_wyner_ziv != sdp:
        expected = "III or IV" if sdp else "I or II"
        raise ConfigurationError(
            f"Case {config.case.value} cannot use this solver (needs {expected})"
        )
    config.check_dimensions(instance)
    if targets.num_users != instance.num_users:
        raise DimensionMismatchError(
            f"{targets.num_users} rate targets for {instance.num_users} users"
        )
    report = validate(instance, beamformers)
    if report.inactive_relays:
        raise DegenerateRelayError(report.inactive_relays)
    return np.asarray(beamformers, dtype=complex)


def _achieved(instance, point, config, mode) -> Tuple[np.ndarray, np.ndarray]:
    """Rates and fronthauls; relays with neither load nor noise report NaN"""
    order = config.downlink_encode_order
    rates = downlink_user_rates(instance, point, config.case.downlink_user_mode, order)
    diag = point.quantization_covariance.diag()
    if np.all(diag > 0):
        fronthauls = downlink_fronthaul_rates(
            instance, point, mode, config.downlink_compress_order
        )
    elif mode == FronthaulMode.IN:
        fronthauls = np.full(instance.num_relays, np.nan)
        active = diag > 0
        if np.any(active):
            load = np.sum(np.abs(point.beamformers[active]) ** 2 * point.powers, axis=1)
            fronthauls[active] = np.log2((load + diag[active]) / diag[active])
    else:
        if np.any(point.powers > 0):
            raise ZeroQuantizationNoiseError("Multivariate compression with zero noise")
        fronthauls = np.full(instance.num_relays, np.nan)
    return rates, fronthauls


def _coupling(instance: NetworkInstance, beamformers: np.ndarray) -> np.ndarray:
    """coupling[k, j] = |h_k^H v_j|^2"""
    return np.abs(instance.channel.conj().T @ beamformers) ** 2


def solve_in_tight_linear(
    instance: NetworkInstance,
    targets: RateTargets,
    beamformers,
    config: StrategyConfig,
) -> DownlinkSolution:
    """
    Cases I-II: solve the (K+M) x (K+M) system of active constraints.

    Row k (active user):  p_k a_kk / (2^R_k - 1) - sum_{j in S_k} p_j a_kj
                          - sum_m q_m |h_{m,k}|^2 = sigma^2
    Row K+m (relay):      (2^C_m - 1) q_m - sum_k |v_{m,k}|^2 p_k = 0
    Users with R_k = 0 get p_k = 0 and beta_k = 0.
    """
    v = _check_inputs(instance, targets, beamformers, config, sdp=False)
    num_users, num_relays = instance.num_users, instance.num_relays
    sinr = targets.sinr_targets
    active = sinr > 0
    coupling = _coupling(instance, v)
    mask = interference_mask(
        num_users, config.case.downlink_user_mode, config.downlink_encode_order
    )
    size = num_users + num_relays
    system = np.zeros((size, size))
    rhs = np.zeros(size)
    for k in range(num_users):
        if not active[k]:
            system[k, k] = 1.0
            continue
        system[k, :num_users] = -np.where(mask[k], coupling[k], 0.0)
        system[k, k] = coupling[k, k] / sinr[k]
        system[k, num_users:] = -instance.channel_gains[:, k]
        rhs[k] = instance.noise_power
    system[num_users:, :num_users] = -np.abs(v) ** 2
    system[num_users:, num_users:] = np.diag(
        np.expm1(instance.fronthaul_caps * math.log(2.0))
    )
    try:
        solution = scipy.linalg.solve(system, rhs)
        multipliers = scipy.linalg.solve(system.T, np.full(size, instance.noise_power))
    except (np.linalg.LinAlgError, ValueError) as e:
        return _infeasible(f"singular tight system ({e})")
    if np.any(solution < -NEGATIVE_TOLERANCE) or not np.all(np.isfinite(solution)):
        return _infeasible(
            f"tight system has negative component {solution.min():.3e}"
        )
    solution = np.clip(solution, 0.0, None)
    p, q = solution[:num_users], solution[num_users:]
    beta = np.where(active, multipliers[:num_users], 0.0)
    lam = multipliers[num_users:]
    if np.any(beta < -NEGATIVE_TOLERANCE) or np.any(lam < -NEGATIVE_TOLERANCE):
        logger.warning("Degenerate dual recovery: beta=%s lambda=%s", beta, lam)

    point = DownlinkPoint(p, HermitianMatrix.diagonal(q), v)
    rates, fronthauls = _achieved(instance, point, config, FronthaulMode.IN)
    return DownlinkSolution(
        point=point,
        achieved_rates=rates,
        achieved_fronthauls=fronthauls,
        sum_power=sum_powers(point),
        duals=DualVariables(rate_duals=beta, fronthaul_duals=lam),
        status=DownlinkStatus.OPTIMAL,
    )


def hermitian_basis(dim: int) -> np.ndarray:
    """
    Real coordinates of Hermitian matrices: dim^2 basis matrices, the
    diagonal first, then (re, im) of each strictly lower entry.
    """
    basis = []
    for i in range(dim):
        b = np.zeros((dim, dim), dtype=complex)
        b[i, i] = 1.0
        basis.append(b)
    for i in range(dim):
        for j in range(i):
            re = np.zeros((dim, dim), dtype=complex)
            re[i, j] = re[j, i] = 1.0
            im = np.zeros((dim, dim), dtype=complex)
            im[i, j] = 1j
            im[j, i] = -1j
            basis.extend([re, im])
    return np.array(basis)


class MultivariateDownlinkProblem:
    """Barrier formulation of Cases III-IV at fixed beamformers"""

    def __init__(self, instance, targets, beamformers, config):
        self.instance = instance
        self.config = config
        self.beamformers = beamformers
        self.logger = logging.getLogger(f"{__name__}.MultivariateDownlinkProblem")
        sinr = targets.sinr_targets
        self.active_users = np.flatnonzero(sinr > 0)
        self.num_powers = self.active_users.size
        num_relays = instance.num_relays
        self.basis = hermitian_basis(num_relays)
        self.compress_order = list(config.downlink_compress_order)
        self.problem = self._build(sinr)

    @property
    def num_variables(self) -> int:
        return self.num_powers + self.basis.shape[0]

    def _build(self, sinr) -> BarrierProblem:
        instance = self.instance
        users = self.active_users
        num_relays = instance.num_relays
        n_p, n = self.num_powers, self.num_variables
        h = instance.channel
        coupling = _coupling(instance, self.beamformers)
        mask = interference_mask(
            instance.num_users,
            self.config.case.downlink_user_mode,
            self.config.downlink_encode_order,
        )

        # rate slacks: p_k a_kk / g_k - sum_{S_k} p_j a_kj - h_k^H Q h_k - sigma^2
        quad = np.einsum("mk,bmn,nk->kb", h.conj(), self.basis, h).real
        scalar_matrix = np.zeros((n_p, n))
        for row, k in enumerate(users):
            for col, j in enumerate(users):
                if j == k:
                    scalar_matrix[row, col] = coupling[k, k] / sinr[k]
                elif mask[k, j]:
                    scalar_matrix[row, col] = -coupling[k, j]
            scalar_matrix[row, n_p:] = -quad[k]
        scalar_offset = np.full(n_p, -instance.noise_power)

        # relay order[i] conditions on order[:i]:
        # 2^C Q[idx, idx] - e_0 e_0^T (Q_rr + Psi_r) >= 0, idx = (r, order[:i])
        loads = np.abs(self.beamformers[:, users]) ** 2
        lmis = []
        for position, relay in enumerate(self.compress_order):
            idx = [relay] + self.compress_order[:position]
            size = len(idx)
            scale = 2.0 ** instance.fronthaul_caps[relay]
            coefficients = np.zeros((n, size, size), dtype=complex)
            block = self.basis[:, idx][:, :, idx]
            coefficients[n_p:] = scale * block
            coefficients[n_p:, 0, 0] -= self.basis[:, relay, relay]
            coefficients[:n_p, 0, 0] = -loads[relay]
            lmis.append(
                LinearMatrixInequality(np.zeros((size, size), dtype=complex), coefficients)
            )
        # Q itself PSD
        q_coefficients = np.zeros((n, num_relays, num_relays), dtype=complex)
        q_coefficients[n_p:] = self.basis
        lmis.append(
            LinearMatrixInequality(np.zeros((num_relays, num_relays), dtype=complex), q_coefficients)
        )

        objective = np.zeros(n)
        objective[:n_p] = instance.noise_power
        objective[n_p : n_p + num_relays] = instance.noise_power
        return BarrierProblem(objective, scalar_matrix, scalar_offset, lmis)

    def initial_point(self) -> np.ndarray:
        x = np.zeros(self.num_variables)
        x[: self.num_powers] = 1.0
        x[self.num_powers : self.num_powers + self.instance.num_relays] = 1.0
        return x

    def bound_weights(self) -> np.ndarray:
        weights = np.zeros(self.num_variables)
        weights[: self.num_powers + self.instance.num_relays] = 1.0
        return weights

    def unpack(self, x: np.ndarray) -> Tuple[np.ndarray, HermitianMatrix]:
        p = np.zeros(self.instance.num_users)
        p[self.active_users] = np.clip(x[: self.num_powers], 0.0, None)
        q = np.tensordot(x[self.num_powers :], self.basis, axes=1)
        return p, HermitianMatrix(q)

    def duals(self, x: np.ndarray, t: float) -> DualVariables:
        slacks = self.problem.scalar_slacks(x)
        beta = np.zeros(self.instance.num_users)
        beta[self.active_users] = 1.0 / (t * slacks)
        blocks = self.problem.dual_matrices(x, t)[: self.instance.num_relays]
        lmi_duals = np.zeros(self.instance.num_relays)
        for relay, block in zip(self.compress_order, blocks):
            lmi_duals[relay] = block[0, 0].real
        ordered_blocks = [None] * self.instance.num_relays
        for relay, block in zip(self.compress_order, blocks):
            ordered_blocks[relay] = block
        return DualVariables(rate_duals=beta, lmi_duals=lmi_duals, lmi_blocks=ordered_blocks)


def _zero_solution(instance, beamformers, config, sdp: bool) -> DownlinkSolution:
    """
    All targets zero: p = 0, Q = 0. The fronthaul duals are not unique here;
    the ones returned satisfy 2^C Lambda_m = sigma^2 + Lambda_m, the beta = 0
    form of the Schur identity, with rank-one blocks.
    """
    num_users, num_relays = instance.num_users, instance.num_relays
    point = DownlinkPoint(np.zeros(num_users), HermitianMatrix.zeros(num_relays), beamformers)
    lam = instance.noise_power / np.expm1(instance.fronthaul_caps * math.log(2.0))
    blocks = []
    if sdp:
        order = list(config.downlink_compress_order)
        blocks = [None] * num_relays
        for position, relay in enumerate(order):
            block = np.zeros((position + 1, position + 1), dtype=complex)
            block[0, 0] = lam[relay]
            blocks[relay] = block
    duals = DualVariables(
        rate_duals=np.zeros(num_users),
        fronthaul_duals=None if sdp else lam,
        lmi_duals=lam if sdp else None,
        lmi_blocks=blocks,
    )
    rates, fronthauls = _achieved(
        instance, point, config, FronthaulMode.MV if sdp else FronthaulMode.IN
    )
    return DownlinkSolution(point, rates, fronthauls, 0.0, duals, DownlinkStatus.OPTIMAL)


def solve_mv_barrier(
    instance: NetworkInstance,
    targets: RateTargets,
    beamformers,
    config: StrategyConfig,
    barrier_settings: Optional[BarrierSettings] = None,
) -> DownlinkSolution:
    """
    Cases III-IV: minimize sigma^2 (sum p + tr Q) over p >= 0 and Hermitian
    Q >= 0 under the linear rate constraints and the per-relay LMIs, with
    the compression order reversed from the uplink decompression order.
    """
    v = _check_inputs(instance, targets, beamformers, config, sdp=True)
    formulation = MultivariateDownlinkProblem(instance, targets, v, config)
    if formulation.num_powers == 0:
        return _zero_solution(instance, v, config, sdp=True)

    solver = LogBarrierSolver(barrier_settings)
    try:
        start = solver.find_strictly_feasible(
            formulation.problem, formulation.initial_point(), formulation.bound_weights()
        )
    except InfeasibleError as e:
        return _infeasible(str(e))
    result = solver.minimize(formulation.problem, start)
    if result.status == BarrierStatus.MAX_ITER:
        return _infeasible(
            f"barrier stopped after {result.stages} stages / {result.newton_steps} Newton steps",
            status=DownlinkStatus.MAX_ITER,
        )
    p, q = formulation.unpack(result.x)
    point = DownlinkPoint(p, q, v)
    rates, fronthauls = _achieved(instance, point, config, FronthaulMode.MV)
    formulation.logger.debug(
        "Case %s downlink optimum %.10g after %d Newton steps",
        config.case.value,
        sum_powers(point),
        result.newton_steps,
    )
    return DownlinkSolution(
        point=point,
        achieved_rates=rates,
        achieved_fronthauls=fronthauls,
        sum_power=sum_powers(point),
        duals=formulation.duals(result.x, result.t),
        status=DownlinkStatus.OPTIMAL,
    )


def extract_duals(solution: DownlinkSolution) -> DualVariables:
    """(beta, lambda) for Cases I-II or (beta, Lambda diag) for Cases III-IV"""
    if not solution.is_optimal or solution.duals is None:
        raise DualsUnavailableError(
            f"No dual variables for a {solution.status.value} solution"
        )
    return solution.duals


DownlinkSolverFactory.register_solver(Case.I, solve_in_tight_linear)
DownlinkSolverFactory.register_solver(Case.II, solve_in_tight_linear)
DownlinkSolverFactory.register_solver(Case.III, solve_mv_barrier, uses_barrier=True)
DownlinkSolverFactory.register_solver(Case.IV, solve_mv_barrier, uses_barrier=True)


def solve_downlink_via_duality(
    instance: NetworkInstance,
    targets: RateTargets,
    config: StrategyConfig,
    settings: Optional[SolverSettings] = None,
    barrier_settings: Optional[BarrierSettings] = None,
) -> Tuple[UplinkSolution, DownlinkSolution]:
    """
    Solve the uplink with adaptive MMSE receivers, then the downlink at V = W
    with reversed orders.

    When the uplink diverges, the downlink is still attempted at the last
    receivers so both verdicts are available on the raised InfeasibleError.
    A downlink that runs out of barrier iterations raises IterationLimitError.
    """
    try:
        uplink = fixed_point_solve(instance, targets, config, settings)
    except InfeasibleError as e:
        downlink = DownlinkSolverFactory.solve(
            instance, targets, e.uplink.point.beamformers, config, barrier_settings
        )
        raise InfeasibleError(str(e), uplink=e.uplink, downlink=downlink) from e

    downlink = DownlinkSolverFactory.solve(
        instance, targets, uplink.point.beamformers, config, barrier_settings
    )
    if downlink.status == DownlinkStatus.MAX_ITER:
        raise IterationLimitError(
            f"Downlink {downlink.status.value}: {downlink.diagnostic}",
            uplink=uplink,
            downlink=downlink,
        )
    if not downlink.is_optimal:
        raise InfeasibleError(
            f"Downlink {downlink.status.value}: {downlink.diagnostic}",
            uplink=uplink,
            downlink=downlink,
        )
    return uplink, downlink
