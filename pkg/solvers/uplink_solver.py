"""
Uplink sum-power minimization via fixed-point power control.

With adaptive beamformers the iterated map is the standard interference
function I_k(p) = (2^{R_k} - 1) / (h_k^H B_k(p)^{-1} h_k), where B_k(p) holds
the interferers of user k, the quantization noises q(p) and sigma^2 I. With
fixed beamformers the map inverts the per-user SINR at w_k.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from core.channel_model import (
    NetworkInstance,
    RateTargets,
    StrategyConfig,
    UserMode,
    validate,
)
from core.errors import (
    ConfigurationError,
    DegenerateRelayError,
    DimensionMismatchError,
    InfeasibleError,
    SolverError,
)
from core.hermitian_core import conditional_variance, solve_hermitian
from core.rate_functions import (
    UplinkPoint,
    interference_mask,
    sum_powers,
    uplink_fronthaul_rates,
    uplink_user_rates,
)

# Iterations before the tail extrapolation is trusted
WARMUP_ITERATIONS = 20
# Consecutive iterations with a projected limit above the cap before giving up
DIVERGENCE_PATIENCE = 50


@dataclass(frozen=True)
class SolverSettings:
    max_iters: int = 100000
    rel_tol: float = 1e-10
    divergence_power_cap: float = 1e12

    def __post_init__(self):
        if self.max_iters <= 0 or self.rel_tol <= 0 or self.divergence_power_cap <= 0:
            raise ConfigurationError("Solver settings must all be positive")

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "SolverSettings":
        defaults = cls()
        return cls(
            max_iters=int(values.get("max_iters", defaults.max_iters)),
            rel_tol=float(values.get("rel_tol", defaults.rel_tol)),
            divergence_power_cap=float(
                values.get("divergence_power_cap", defaults.divergence_power_cap)
            ),
        )


@dataclass(frozen=True, eq=False)
class UplinkSolution:
    point: UplinkPoint
    achieved_rates: np.ndarray
    achieved_fronthauls: np.ndarray
    sum_power: float
    iterations: int
    converged: bool
    diagnostic: str = ""


def _sinr_targets(instance: NetworkInstance, targets: RateTargets) -> np.ndarray:
    if targets.num_users != instance.num_users:
        raise DimensionMismatchError(
            f"{targets.num_users} rate targets for {instance.num_users} users"
        )
    return targets.sinr_targets


def _powers(instance: NetworkInstance, p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != instance.num_users:
        raise DimensionMismatchError(f"{p.shape[0]} powers for {instance.num_users} users")
    return p


def q_in_closed_form(instance: NetworkInstance, p) -> np.ndarray:
    """q_m = (sum_k p_k |h_{m,k}|^2 + sigma^2) / (2^{C_m} - 1)"""
    p = _powers(instance, p)
    received = instance.channel_gains @ p + instance.noise_power
    return received / np.expm1(instance.fronthaul_caps * math.log(2.0))


def q_wz_recursive(instance: NetworkInstance, p, order: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Wyner-Ziv quantization noises making every WZ fronthaul rate equal to its cap.

    Relay order[i] uses the noises already fixed for order[:i] as side
    information: q = (Schur numerator without own noise) / (2^C - 1).
    """
    p = _powers(instance, p)
    order = list(range(instance.num_relays)) if order is None else list(order)
    h = instance.channel
    gamma = (h * p) @ h.conj().T + instance.noise_power * np.eye(instance.num_relays)
    denominators = np.expm1(instance.fronthaul_caps * math.log(2.0))
    q = np.zeros(instance.num_relays)
    for position, relay in enumerate(order):
        earlier = order[:position]
        numerator = conditional_variance(gamma, relay, earlier)
        q[relay] = numerator / denominators[relay]
        gamma[relay, relay] += q[relay]
    return q


def quantization_noises(instance: NetworkInstance, p, config: StrategyConfig) -> np.ndarray:
    if config.case.uses_wyner_ziv:
        return q_wz_recursive(instance, p, config.decompress_order)
    return q_in_closed_form(instance, p)


def _interference_covariances(instance, p, q, mask) -> np.ndarray:
    """B_k = sum_{j in mask[k]} p_j h_j h_j^H + diag(q) + sigma^2 I, stacked K x M x M"""
    h = instance.channel
    outer = np.einsum("mj,nj->jmn", h, h.conj()) * p[:, None, None]
    base = np.diag(q + instance.noise_power).astype(complex)
    return base[None, :, :] + np.einsum("kj,jmn->kmn", mask.astype(float), outer)


def mmse_beamformers(
    instance: NetworkInstance,
    p,
    q,
    mode: UserMode = UserMode.TIN,
    order: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Unit-norm MMSE receivers, one column per user.

    For SIC the covariance of user k only keeps users decoded after it.
    """
    p = _powers(instance, p)
    q = np.asarray(q, dtype=float)
    mask = interference_mask(instance.num_users, mode, order)
    covariances = _interference_covariances(instance, p, q, mask)
    w = np.empty((instance.num_relays, instance.num_users), dtype=complex)
    for k in range(instance.num_users):
        filt = solve_hermitian(covariances[k], instance.user_channel(k))
        norm = np.linalg.norm(filt)
        if norm == 0:
            raise SolverError(f"User {k} has an all-zero channel")
        w[:, k] = filt / norm
    return w


def interference_map(
    instance: NetworkInstance, p, targets: RateTargets, config: StrategyConfig
) -> np.ndarray:
    """Adaptive-beamformer standard interference function I(p)"""
    p = _powers(instance, p)
    sinr = _sinr_targets(instance, targets)
    q = quantization_noises(instance, p, config)
    mask = interference_mask(
        instance.num_users, config.case.uplink_user_mode, config.decode_order
    )
    covariances = _interference_covariances(instance, p, q, mask)
    result = np.zeros(instance.num_users)
    for k in np.flatnonzero(sinr > 0):
        h_k = instance.user_channel(k)
        gain = np.vdot(h_k, solve_hermitian(covariances[k], h_k)).real
        result[k] = sinr[k] / gain
    return result


def fixed_beamformer_map(
    instance: NetworkInstance,
    p,
    targets: RateTargets,
    config: StrategyConfig,
    beamformers: np.ndarray,
) -> np.ndarray:
    """SINR inversion p_k <- (2^{R_k}-1) (interference + noise at w_k) / |w_k^H h_k|^2"""
    p = _powers(instance, p)
    sinr = _sinr_targets(instance, targets)
    q = quantization_noises(instance, p, config)
    w = np.asarray(beamformers, dtype=complex)
    coupling = np.abs(w.conj().T @ instance.channel) ** 2
    mask = interference_mask(
        instance.num_users, config.case.uplink_user_mode, config.decode_order
    )
    interference = np.sum(np.where(mask, coupling * p[None, :], 0.0), axis=1)
    power_w = np.abs(w) ** 2
    noise = power_w.T @ q + instance.noise_power * np.sum(power_w, axis=0)
    return sinr * (interference + noise) / coupling.diagonal()


class FixedPointSolver:
    """Picard iteration of an uplink power map from a given starting point"""

    def __init__(self, settings: Optional[SolverSettings] = None):
        self.settings = settings or SolverSettings()
        self.logger = logging.getLogger(f"{__name__}.FixedPointSolver")

    def iterate(self, mapping, start: np.ndarray):
        """
        Run p <- mapping(p) until convergence or divergence.

        Returns (p, iterations, converged, diagnostic).
        """
        settings = self.settings
        p = np.array(start, dtype=float)
        previous_step = None
        over_cap = 0
        for iteration in range(1, settings.max_iters + 1):
            nxt = mapping(p)
            if not np.all(np.isfinite(nxt)) or np.max(nxt, initial=0.0) > settings.divergence_power_cap:
                return p, iteration, False, (
                    f"power exceeded cap {settings.divergence_power_cap:.3g} "
                    f"after {iteration} iterations"
                )
            step = float(np.max(np.abs(nxt - p), initial=0.0))
            scale = max(1.0, float(np.max(nxt, initial=0.0)))
            p = nxt
            if step <= settings.rel_tol * scale:
                return p, iteration, True, ""
            if previous_step is not None and previous_step > 0 and iteration > WARMUP_ITERATIONS:
                ratio = step / previous_step
                remaining = step * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
                if scale + remaining > settings.divergence_power_cap:
                    over_cap += 1
                    if over_cap >= DIVERGENCE_PATIENCE:
                        return p, iteration, False, (
                            f"projected powers exceed cap {settings.divergence_power_cap:.3g} "
                            f"(step ratio {ratio:.6f}) after {iteration} iterations"
                        )
                else:
                    over_cap = 0
                    if remaining <= settings.rel_tol * scale:
                        return p, iteration, True, ""
            previous_step = step
        return p, settings.max_iters, False, f"no convergence in {settings.max_iters} iterations"


def _build_solution(instance, targets, config, p, beamformers, iterations, converged, diagnostic):
    q = quantization_noises(instance, p, config)
    if beamformers is None:
        beamformers = mmse_beamformers(
            instance, p, q, config.case.uplink_user_mode, config.decode_order
        )
    point = UplinkPoint(p, q, beamformers)
    return UplinkSolution(
        point=point,
        achieved_rates=uplink_user_rates(
            instance, point, config.case.uplink_user_mode, config.decode_order
        ),
        achieved_fronthauls=uplink_fronthaul_rates(
            instance, point, config.case.uplink_fronthaul_mode, config.decompress_order
        ),
        sum_power=sum_powers(point),
        iterations=iterations,
        converged=converged,
        diagnostic=diagnostic,
    )


def fixed_point_solve(
    instance: NetworkInstance,
    targets: RateTargets,
    config: StrategyConfig,
    settings: Optional[SolverSettings] = None,
    fixed_beamformers: Optional[np.ndarray] = None,
    initial_powers=None,
) -> UplinkSolution:
    """
    Minimum uplink sum power for the configured case.

    Starts from p = 0 unless initial_powers is given. Raises InfeasibleError
    carrying the non-converged solution when the iteration diverges or runs
    out of iterations.
    """
    config.check_dimensions(instance)
    _sinr_targets(instance, targets)
    if fixed_beamformers is not None:
        report = validate(instance, fixed_beamformers)
        if report.inactive_relays:
            raise DegenerateRelayError(report.inactive_relays)
        beamformers = np.asarray(fixed_beamformers, dtype=complex)

        def mapping(p):
            return fixed_beamformer_map(instance, p, targets, config, beamformers)

    else:
        beamformers = None

        def mapping(p):
            return interference_map(instance, p, targets, config)

    start = np.zeros(instance.num_users) if initial_powers is None else _powers(instance, initial_powers)
    solver = FixedPointSolver(settings)
    p, iterations, converged, diagnostic = solver.iterate(mapping, start)
    solution = _build_solution(
        instance, targets, config, p, beamformers, iterations, converged, diagnostic
    )
    if not converged:
        solver.logger.info("Case %s uplink infeasible: %s", config.case.value, diagnostic)
        raise InfeasibleError(f"Uplink infeasible: {diagnostic}", uplink=solution)
    solver.logger.debug(
        "Case %s uplink converged in %d iterations, sum power %.6g",
        config.case.value,
        iterations,
        solution.sum_power,
    )
    return solution
