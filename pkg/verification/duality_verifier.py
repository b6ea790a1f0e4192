"""
Executable duality checks over solved uplink/downlink pairs.

A report compares the two minimum sum powers, matches the downlink dual
variables against the uplink powers and quantization noises, and records
constraint tightness on both links.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from core.channel_model import (
    FronthaulMode,
    NetworkInstance,
    RateTargets,
    StrategyConfig,
    instance_to_dict,
)
from core.errors import ConfigurationError, InfeasibleError, IterationLimitError, PropertyViolationError
from core.hermitian_core import log_det, schur_complement
from core.rate_functions import (
    UplinkPoint,
    gamma_covariance,
    uplink_fronthaul_rates,
)
from solvers.barrier import BarrierSettings
from solvers.downlink_solver import (
    DownlinkSolution,
    DownlinkStatus,
    extract_duals,
    solve_downlink_via_duality,
)
from solvers.uplink_solver import (
    SolverSettings,
    UplinkSolution,
    fixed_point_solve,
    interference_map,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DualityTolerances:
    lp_gap: float = 1e-8
    sdp_gap: float = 1e-4
    lp_dual: float = 1e-6
    sdp_dual: float = 1e-3
    tightness: float = 1e-6
    rank_ratio: float = 1e-5
    dual_identity: float = 1e-4
    boundary_margin: float = 0.01

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "DualityTolerances":
        defaults = asdict(cls())
        return cls(**{k: float(values.get(k, v)) for k, v in defaults.items()})


@dataclass
class TightnessResiduals:
    rate: np.ndarray
    fronthaul: np.ndarray

    @property
    def worst(self) -> float:
        return float(max(np.max(self.rate, initial=0.0), np.max(self.fronthaul, initial=0.0)))


@dataclass
class DualityReport:
    case: str
    uplink_sum_power: float = math.nan
    downlink_sum_power: float = math.nan
    relative_gap: float = math.nan
    beta_residual: float = math.nan
    quantization_dual_residual: float = math.nan
    uplink_rate_residual: float = math.nan
    uplink_fronthaul_residual: float = math.nan
    downlink_rate_residual: float = math.nan
    downlink_fronthaul_residual: float = math.nan
    rank_ratio: float = math.nan
    dual_identity_residual: float = math.nan
    uplink_feasible: bool = True
    downlink_feasible: bool = True
    downlink_converged: bool = True  # False when the barrier ran out of iterations
    checks: Dict[str, bool] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    diagnostic: str = ""

    @property
    def feasible(self) -> bool:
        return self.uplink_feasible and self.downlink_feasible

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["passed"] = self.passed
        # NaN is not valid JSON
        return {
            k: (None if isinstance(v, float) and math.isnan(v) else v)
            for k, v in data.items()
        }


def save_report(
    report: DualityReport,
    path: Union[str, Path],
    instance: Optional[NetworkInstance] = None,
) -> Path:
    """Archive a report as JSON, optionally next to its instance fields"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = report.to_dict()
    if instance is not None:
        data["instance"] = instance_to_dict(instance)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
    return path


def relative_residual(estimate, reference) -> float:
    """||estimate - reference||_inf / ||reference||_inf (absolute when the reference is 0)"""
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    diff = float(np.max(np.abs(estimate - reference), initial=0.0))
    scale = float(np.max(np.abs(reference), initial=0.0))
    return diff / scale if scale > 0 else diff


def check_tightness(
    solution: Union[UplinkSolution, DownlinkSolution], targets: RateTargets, caps
) -> TightnessResiduals:
    """|rate_k - R_k| and |fronthaul_m - C_m|; vacuous (NaN) fronthauls count as 0"""
    rates = np.asarray(solution.achieved_rates, dtype=float)
    fronthauls = np.asarray(solution.achieved_fronthauls, dtype=float)
    rate_residual = np.abs(rates - targets.rates)
    fronthaul_residual = np.abs(fronthauls - np.asarray(caps, dtype=float))
    return TightnessResiduals(
        rate=rate_residual, fronthaul=np.where(np.isnan(fronthauls), 0.0, fronthaul_residual)
    )


def check_wz_chain_rule(
    instance: NetworkInstance, point: UplinkPoint, order=None
) -> float:
    """|sum_m C_m^WZ - log2(det Gamma / prod q)|"""
    rates = uplink_fronthaul_rates(instance, point, FronthaulMode.WZ, order)
    gamma = gamma_covariance(instance, point, order)
    total = (log_det(gamma) - np.sum(np.log(point.quantization_noises))) / math.log(2.0)
    return float(abs(np.sum(rates) - total))


def _rank_ratio(blocks: List[np.ndarray]) -> float:
    worst = 0.0
    for block in blocks:
        if block.shape[0] < 2:
            continue
        eigenvalues = np.linalg.eigvalsh(block)
        largest = eigenvalues[-1]
        if largest > 0:
            worst = max(worst, eigenvalues[-2] / largest)
    return float(worst)


def _dual_identity_residual(instance: NetworkInstance, config: StrategyConfig, duals) -> float:
    """
    Worst relative mismatch of 2^{C_m} Lambda_m = Schur complement of
    Omega = sigma^2 I + sum_k beta_k h_k h_k^H + diag(Lambda) in decompression order.
    """
    h = instance.channel
    omega = (h * duals.rate_duals) @ h.conj().T
    omega = omega + np.diag(instance.noise_power + duals.lmi_duals)
    order = list(config.decompress_order)
    omega = omega[np.ix_(order, order)]
    worst = 0.0
    for position, relay in enumerate(order):
        schur = schur_complement(omega, position + 1)
        lhs = 2.0 ** instance.fronthaul_caps[relay] * duals.lmi_duals[relay]
        worst = max(worst, abs(lhs - schur) / schur)
    return float(worst)


def verify_duality(
    instance: NetworkInstance,
    targets: RateTargets,
    config: StrategyConfig,
    tolerances: Optional[DualityTolerances] = None,
    settings: Optional[SolverSettings] = None,
    barrier_settings: Optional[BarrierSettings] = None,
) -> DualityReport:
    """
    Run the duality pipeline and fill a report.

    Infeasible targets do not raise: the report records both verdicts and the
    feasibility_agreement check passes iff both links are infeasible.
    """
    tolerances = tolerances or DualityTolerances()
    sdp = config.case.uses_wyner_ziv
    gap_tol = tolerances.sdp_gap if sdp else tolerances.lp_gap
    dual_tol = tolerances.sdp_dual if sdp else tolerances.lp_dual
    report = DualityReport(
        case=config.case.value,
        tolerances={
            "gap": gap_tol,
            "dual": dual_tol,
            "tightness": tolerances.tightness,
            **({"rank_ratio": tolerances.rank_ratio, "dual_identity": tolerances.dual_identity} if sdp else {}),
        },
    )
    try:
        uplink, downlink = solve_downlink_via_duality(
            instance, targets, config, settings, barrier_settings
        )
    except (InfeasibleError, IterationLimitError) as e:
        downlink = e.downlink
        report.uplink_feasible = e.uplink is not None and e.uplink.converged
        report.downlink_converged = downlink is None or downlink.status != DownlinkStatus.MAX_ITER
        # an iteration budget running out says nothing about feasibility
        report.downlink_feasible = downlink is not None and downlink.status != DownlinkStatus.INFEASIBLE
        if report.uplink_feasible:
            report.uplink_sum_power = e.uplink.sum_power
        if report.downlink_feasible:
            report.downlink_sum_power = downlink.sum_power
        if report.downlink_converged:
            report.checks["feasibility_agreement"] = not (
                report.uplink_feasible or report.downlink_feasible
            )
        else:
            report.checks["downlink_converged"] = False
        report.diagnostic = str(e)
        logger.info("Case %s not solved: %s", config.case.value, e)
        return report

    report.uplink_sum_power = uplink.sum_power
    report.downlink_sum_power = downlink.sum_power
    difference = abs(uplink.sum_power - downlink.sum_power)
    report.relative_gap = difference / uplink.sum_power if uplink.sum_power > 0 else difference

    duals = extract_duals(downlink)
    report.beta_residual = relative_residual(duals.rate_duals, uplink.point.powers)
    report.quantization_dual_residual = relative_residual(
        duals.quantization_duals, uplink.point.quantization_noises
    )
    up = check_tightness(uplink, targets, instance.fronthaul_caps)
    down = check_tightness(downlink, targets, instance.fronthaul_caps)
    report.uplink_rate_residual = float(np.max(up.rate, initial=0.0))
    report.uplink_fronthaul_residual = float(np.max(up.fronthaul, initial=0.0))
    report.downlink_rate_residual = float(np.max(down.rate, initial=0.0))
    report.downlink_fronthaul_residual = float(np.max(down.fronthaul, initial=0.0))

    report.checks["sum_power_gap"] = report.relative_gap <= gap_tol
    report.checks["rate_duals"] = report.beta_residual <= dual_tol
    report.checks["quantization_duals"] = report.quantization_dual_residual <= dual_tol
    report.checks["uplink_tightness"] = up.worst <= tolerances.tightness
    report.checks["downlink_tightness"] = down.worst <= tolerances.tightness
    if sdp and np.any(targets.rates > 0):
        report.rank_ratio = _rank_ratio(duals.lmi_blocks)
        report.dual_identity_residual = _dual_identity_residual(instance, config, duals)
        report.checks["rank_one_duals"] = report.rank_ratio <= tolerances.rank_ratio
        report.checks["fronthaul_dual_identity"] = (
            report.dual_identity_residual <= tolerances.dual_identity
        )
    logger.debug(
        "Case %s: P_ul=%.10g P_dl=%.10g gap=%.3e pass=%s",
        config.case.value,
        report.uplink_sum_power,
        report.downlink_sum_power,
        report.relative_gap,
        report.passed,
    )
    return report


@dataclass
class PropertyReport:
    trials: int
    violations: List[Dict[str, Any]] = field(default_factory=list)
    min_positivity: float = math.inf  # smallest I_k(p)
    min_scalability_margin: float = math.inf  # smallest (alpha I_k(p) - I_k(alpha p)) / (alpha I_k(p))
    min_monotonicity_margin: float = math.inf  # smallest (I_k(p_bar) - I_k(p)) / I_k(p)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_interference_properties(
    instance: NetworkInstance,
    targets: RateTargets,
    config: StrategyConfig,
    trials: int,
    seed: int = 0,
    alphas=(1.5, 2.0, 10.0),
    raise_on_violation: bool = False,
) -> PropertyReport:
    """
    Sample p >= 0 and check positivity, I(alpha p) < alpha I(p) for alpha > 1
    (equality for alpha = 1), and monotonicity on users with R_k > 0.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    users = np.flatnonzero(targets.rates > 0)
    report = PropertyReport(trials=trials)

    def violation(prop, p, alpha, k):
        report.violations.append({"property": prop, "powers": p.tolist(), "alpha": alpha, "user": int(k)})
        if raise_on_violation:
            raise PropertyViolationError(prop, p, alpha, int(k))

    for _ in range(trials):
        p = 10.0 ** rng.uniform(-2.0, 1.0, instance.num_users)
        base = interference_map(instance, p, targets, config)
        for k in users:
            report.min_positivity = min(report.min_positivity, float(base[k]))
            if not base[k] > 0:
                violation("positivity", p, 1.0, k)
        for alpha in alphas:
            scaled = interference_map(instance, alpha * p, targets, config)
            for k in users:
                if alpha == 1.0:
                    if not math.isclose(scaled[k], base[k], rel_tol=1e-12):
                        violation("scalability", p, alpha, k)
                    continue
                margin = (alpha * base[k] - scaled[k]) / (alpha * base[k])
                report.min_scalability_margin = min(report.min_scalability_margin, float(margin))
                if not scaled[k] < alpha * base[k]:
                    violation("scalability", p, alpha, k)
        bigger = p * (1.0 + rng.uniform(1e-3, 1.0, instance.num_users))
        raised = interference_map(instance, bigger, targets, config)
        for k in users:
            margin = (raised[k] - base[k]) / base[k]
            report.min_monotonicity_margin = min(report.min_monotonicity_margin, float(margin))
            if raised[k] < base[k] * (1.0 - 1e-12):
                violation("monotonicity", p, 1.0, k)
    return report


def check_uniqueness(
    instance: NetworkInstance,
    targets: RateTargets,
    config: StrategyConfig,
    settings: Optional[SolverSettings] = None,
    start_level: float = 10.0,
) -> float:
    """inf-norm distance between fixed points reached from p = 0 and p = start_level * 1"""
    from_zero = fixed_point_solve(instance, targets, config, settings)
    from_above = fixed_point_solve(
        instance,
        targets,
        config,
        settings,
        initial_powers=np.full(instance.num_users, start_level),
    )
    return float(np.max(np.abs(from_zero.point.powers - from_above.point.powers)))


def is_uplink_feasible(
    instance: NetworkInstance,
    rate: float,
    config: StrategyConfig,
    settings: Optional[SolverSettings] = None,
) -> bool:
    try:
        fixed_point_solve(
            instance, RateTargets.symmetric(instance.num_users, rate), config, settings
        )
    except InfeasibleError:
        return False
    return True


def find_rate_boundary(
    instance: NetworkInstance,
    config: StrategyConfig,
    upper: float,
    settings: Optional[SolverSettings] = None,
    tolerance: float = 1e-4,
) -> float:
    """
    Bisection for the largest feasible symmetric rate target in [0, upper].

    Returns math.inf when `upper` itself is feasible.
    """
    if is_uplink_feasible(instance, upper, config, settings):
        return math.inf
    low, high = 0.0, float(upper)
    while high - low > tolerance * max(1.0, high):
        middle = 0.5 * (low + high)
        if is_uplink_feasible(instance, middle, config, settings):
            low = middle
        else:
            high = middle
    return 0.5 * (low + high)
