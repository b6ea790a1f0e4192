"""
Rate-target sweeps over strategy cases.

A sweep solves the uplink/downlink pair at every (case, rate target) grid
point of one instance and records both minimum sum powers with the dual
residuals. Results are emitted as CSV; row order never depends on the order
in which grid points were solved.
"""

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from core.channel_model import (
    Case,
    NetworkInstance,
    RateTargets,
    StrategyConfig,
    generate_rayleigh,
    instance_from_dict,
    load_instance,
    parse_order,
)
from core.errors import ConfigurationError, ParseError
from solvers.barrier import BarrierSettings
from solvers.uplink_solver import SolverSettings
from verification.duality_verifier import (
    DualityReport,
    DualityTolerances,
    find_rate_boundary,
    verify_duality,
)

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "case",
    "rate_target",
    "ul_power",
    "dl_power",
    "rel_gap",
    "beta_resid",
    "q_resid",
    "status",
]

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"
STATUS_MISMATCH = "mismatch"
STATUS_NEAR_BOUNDARY = "near_boundary"

_INSTANCE_KEYS = ("M", "K", "sigma2", "caps", "H")


@dataclass(frozen=True)
class SweepConfig:
    """One instance, a symmetric rate grid and the cases to solve"""

    rates: Tuple[float, ...]
    cases: Tuple[Case, ...]
    seed: Optional[int] = 7
    num_relays: int = 3
    num_users: int = 3
    noise_power: float = 1.0
    fronthaul_cap: float = 3.0
    instance_path: Optional[str] = None
    instance_data: Optional[Dict[str, Any]] = None
    decode_order: Optional[Tuple[int, ...]] = None  # None: natural
    decompress_order: Optional[Tuple[int, ...]] = None
    output: Optional[str] = None
    tolerances: Optional[DualityTolerances] = None
    mark_boundary: bool = True
    workers: int = 1

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if not rates:
            raise ConfigurationError("Rate grid is empty")
        if any(not math.isfinite(r) or r < 0 for r in rates):
            raise ConfigurationError("Rate targets must be finite and nonnegative")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ConfigurationError("Rate grid must be strictly increasing")
        cases = tuple(Case.parse(c) for c in self.cases)
        if not cases:
            raise ConfigurationError("Sweep needs at least one case")
        if len(set(cases)) != len(cases):
            raise ConfigurationError("Duplicate case in sweep")
        if int(self.workers) < 1:
            raise ConfigurationError("workers must be at least 1")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "cases", cases)

    def build_instance(self) -> NetworkInstance:
        if self.instance_data is not None:
            return instance_from_dict(self.instance_data)
        if self.instance_path is not None:
            return load_instance(self.instance_path)
        if self.seed is None:
            raise ConfigurationError("Sweep needs a seed, an instance file or inline instance fields")
        return generate_rayleigh(
            self.num_relays, self.num_users, self.seed, self.noise_power, self.fronthaul_cap
        )

    def strategy(self, case: Case, instance: NetworkInstance) -> StrategyConfig:
        decode = self.decode_order or tuple(range(instance.num_users))
        decompress = self.decompress_order or tuple(range(instance.num_relays))
        config = StrategyConfig(case, decode, decompress)
        config.check_dimensions(instance)
        return config


def _rate_grid(raw, path: str) -> List[float]:
    if isinstance(raw, dict):
        try:
            start = float(raw["start"])
            stop = float(raw["stop"])
            step = float(raw["step"])
        except (KeyError, TypeError, ValueError):
            raise ParseError("needs numeric start, stop and step", path=path, field="rate_grid")
        if step <= 0:
            raise ParseError("step must be positive", path=path, field="rate_grid")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        # round away accumulated float error so 0.25 steps print as 0.25
        return [round(start + i * step, 12) for i in range(count)]
    if isinstance(raw, (int, float)):
        return [float(raw)]
    if isinstance(raw, list):
        try:
            return [float(r) for r in raw]
        except (TypeError, ValueError):
            raise ParseError("rate targets must be numbers", path=path, field="rates")
    raise ParseError("missing rate grid", path=path, field="rates")


def _order(raw, name: str, path: str) -> Optional[Tuple[int, ...]]:
    if raw is None or raw == "natural":
        return None
    text = ",".join(str(v) for v in raw) if isinstance(raw, list) else str(raw)
    # dimensions are checked against the instance later
    size = len(text.split(","))
    try:
        return parse_order(text, size, name)
    except ConfigurationError as e:
        raise ParseError(str(e), path=path, field=name)


def sweep_config_from_dict(data: Dict[str, Any], path: str = "<sweep>") -> SweepConfig:
    """Build a SweepConfig from the key/value sweep form"""
    if not isinstance(data, dict):
        raise ParseError("top level must be a key/value mapping", path=path)

    instance_data = None
    instance_path = data.get("instance")
    if all(key in data for key in ("M", "K", "H")):
        instance_data = {key: data[key] for key in _INSTANCE_KEYS if key in data}
    elif instance_path is not None:
        # relative to the sweep file
        base = Path(path).parent if path != "<sweep>" else Path(".")
        instance_path = str(base / instance_path)

    try:
        num_relays = int(data.get("M", 3))
        num_users = int(data.get("K", 3))
        seed = data.get("seed", None if instance_data or instance_path else 7)
        seed = None if seed is None else int(seed)
        noise_power = float(data.get("sigma2", 1.0))
        cap = data.get("caps", 3.0)
        fronthaul_cap = float(cap if not isinstance(cap, list) else cap[0])
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad instance field ({e})", path=path)

    tolerances = None
    if isinstance(data.get("tolerances"), dict):
        tolerances = DualityTolerances.from_dict(data["tolerances"])

    cases = data.get("cases", [c.value for c in Case])
    if isinstance(cases, str):
        cases = [c for c in cases.replace(",", " ").split() if c]

    orders = data.get("orders") or {}
    if orders == "natural":
        orders = {}
    return SweepConfig(
        rates=tuple(_rate_grid(data.get("rates", data.get("rate_grid")), path)),
        cases=tuple(cases),
        seed=seed,
        num_relays=num_relays,
        num_users=num_users,
        noise_power=noise_power,
        fronthaul_cap=fronthaul_cap,
        instance_path=instance_path,
        instance_data=instance_data,
        decode_order=_order(orders.get("decode"), "decode_order", path),
        decompress_order=_order(orders.get("decompress"), "decompress_order", path),
        output=data.get("output"),
        tolerances=tolerances,
        mark_boundary=bool(data.get("mark_boundary", True)),
        workers=int(data.get("workers", 1)),
    )


def load_sweep_config(path: Union[str, Path]) -> SweepConfig:
    """Load a YAML (or JSON) sweep file"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read file ({e.strerror})", path=str(path))
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ParseError(getattr(e, "problem", None) or str(e), path=str(path), line=line)
    return sweep_config_from_dict(data, str(path))


@dataclass
class SweepRow:
    case: str
    rate_target: float
    ul_power: float = math.nan
    dl_power: float = math.nan
    rel_gap: float = math.nan
    beta_resid: float = math.nan
    q_resid: float = math.nan
    status: str = STATUS_OK
    wall_time: float = 0.0
    near_boundary: bool = False

    @property
    def sort_key(self) -> Tuple[int, float]:
        return list(Case).index(Case.parse(self.case)), self.rate_target


@dataclass
class SweepTable:
    rows: List[SweepRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def sorted(self) -> "SweepTable":
        return SweepTable(sorted(self.rows, key=lambda r: r.sort_key))

    def for_case(self, case: Union[str, Case]) -> List[SweepRow]:
        case = Case.parse(case).value
        return [row for row in self.rows if row.case == case]

    @property
    def all_infeasible(self) -> bool:
        return bool(self.rows) and all(r.status == STATUS_INFEASIBLE for r in self.rows)

    @property
    def has_mismatch(self) -> bool:
        return any(r.status == STATUS_MISMATCH for r in self.rows)


def _row_status(report: DualityReport, near_boundary: bool) -> str:
    if report.passed:
        return STATUS_INFEASIBLE if not report.uplink_feasible else STATUS_OK
    return STATUS_NEAR_BOUNDARY if near_boundary else STATUS_MISMATCH


def _row_from_report(report: DualityReport, rate: float, near_boundary: bool, elapsed: float) -> SweepRow:
    row = SweepRow(
        case=report.case,
        rate_target=rate,
        rel_gap=report.relative_gap,
        beta_resid=report.beta_residual,
        q_resid=report.quantization_dual_residual,
        status=_row_status(report, near_boundary),
        wall_time=elapsed,
        near_boundary=near_boundary,
    )
    if report.uplink_feasible:
        row.ul_power = report.uplink_sum_power
    if report.downlink_feasible:
        row.dl_power = report.downlink_sum_power
    return row


class SweepRunner:
    """Solves every grid point of a SweepConfig"""

    def __init__(
        self,
        config: SweepConfig,
        settings: Optional[SolverSettings] = None,
        barrier_settings: Optional[BarrierSettings] = None,
        tolerances: Optional[DualityTolerances] = None,
        run_logger=None,
    ):
        self.config = config
        self.settings = settings or SolverSettings()
        self.barrier_settings = barrier_settings or BarrierSettings()
        self.tolerances = config.tolerances or tolerances or DualityTolerances()
        self.run_logger = run_logger
        self.logger = logging.getLogger(f"{__name__}.SweepRunner")

    def _boundary(self, instance: NetworkInstance, strategy: StrategyConfig) -> float:
        if not self.config.mark_boundary:
            return math.inf
        boundary = find_rate_boundary(instance, strategy, self.config.rates[-1], self.settings)
        self.logger.debug("Case %s uplink rate boundary %.6g", strategy.case.value, boundary)
        return boundary

    def _is_near(self, rate: float, boundary: float) -> bool:
        if not math.isfinite(boundary):
            return False
        return abs(rate - boundary) <= self.tolerances.boundary_margin * max(boundary, 1e-12)

    def _solve_point(
        self, instance: NetworkInstance, strategy: StrategyConfig, rate: float, boundary: float
    ) -> SweepRow:
        start = time.perf_counter()
        report = verify_duality(
            instance,
            RateTargets.symmetric(instance.num_users, rate),
            strategy,
            self.tolerances,
            self.settings,
            self.barrier_settings,
        )
        row = _row_from_report(report, rate, self._is_near(rate, boundary), time.perf_counter() - start)
        if row.status == STATUS_MISMATCH:
            self.logger.warning(
                "Case %s rate %.4g failed checks %s",
                row.case,
                rate,
                sorted(k for k, ok in report.checks.items() if not ok),
            )
        if self.run_logger is not None:
            self.run_logger.log_point(
                row.case,
                rate,
                row.status,
                row.ul_power,
                row.dl_power,
                rel_gap=row.rel_gap,
                beta_resid=row.beta_resid,
                q_resid=row.q_resid,
                wall_time=row.wall_time,
                checks=report.checks,
            )
        return row

    def run(self) -> SweepTable:
        instance = self.config.build_instance()
        # config errors surface here, before any solve
        strategies = [self.config.strategy(case, instance) for case in self.config.cases]
        jobs = []
        for strategy in strategies:
            boundary = self._boundary(instance, strategy)
            jobs.extend((strategy, rate, boundary) for rate in self.config.rates)

        self.logger.info(
            "Sweeping %d grid points (M=%d, K=%d)",
            len(jobs),
            instance.num_relays,
            instance.num_users,
        )
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                rows = list(pool.map(lambda job: self._solve_point(instance, *job), jobs))
        else:
            rows = [self._solve_point(instance, *job) for job in jobs]
        return SweepTable(rows).sorted()


def run_sweep(
    config: SweepConfig,
    settings: Optional[SolverSettings] = None,
    barrier_settings: Optional[BarrierSettings] = None,
    tolerances: Optional[DualityTolerances] = None,
    run_logger=None,
) -> SweepTable:
    """Solve every (case, rate target) point; rows sorted by (case, rate)"""
    return SweepRunner(config, settings, barrier_settings, tolerances, run_logger).run()


def _format_number(value: float) -> str:
    if value is None or not math.isfinite(value):
        return ""
    return format(float(value), ".12g")


def emit_csv(table: SweepTable, path: Union[str, Path]) -> Path:
    """Write the table with 12 significant digits; infeasible powers are empty"""
    if not table.rows:
        raise ConfigurationError("Cannot emit an empty sweep table")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in table.rows:
                writer.writerow(
                    [
                        row.case,
                        _format_number(row.rate_target),
                        _format_number(row.ul_power),
                        _format_number(row.dl_power),
                        _format_number(row.rel_gap),
                        _format_number(row.beta_resid),
                        _format_number(row.q_resid),
                        row.status,
                    ]
                )
    except OSError as e:
        raise OSError(f"{path}: cannot write sweep CSV ({e.strerror or e})") from e
    return path


def _parse_number(text: str) -> float:
    return float(text) if text else math.nan


def parse_csv(path: Union[str, Path]) -> SweepTable:
    """Read a CSV written by emit_csv"""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ParseError("unexpected CSV header", path=str(path), line=1)
        rows = []
        for line, record in enumerate(reader, start=2):
            if len(record) != len(CSV_HEADER):
                raise ParseError(
                    f"expected {len(CSV_HEADER)} columns, got {len(record)}",
                    path=str(path),
                    line=line,
                )
            try:
                values = [_parse_number(v) for v in record[1:7]]
            except ValueError as e:
                raise ParseError(str(e), path=str(path), line=line)
            rows.append(
                SweepRow(
                    case=record[0],
                    rate_target=values[0],
                    ul_power=values[1],
                    dl_power=values[2],
                    rel_gap=values[3],
                    beta_resid=values[4],
                    q_resid=values[5],
                    status=record[7],
                    near_boundary=record[7] == STATUS_NEAR_BOUNDARY,
                )
            )
    return SweepTable(rows)


def rows_equal(a: SweepTable, b: SweepTable, rel_tol: float = 1e-11) -> bool:
    """Row-wise equality up to the CSV's 12 significant digits"""
    if len(a) != len(b):
        return False
    for left, right in zip(a.rows, b.rows):
        if (left.case, left.status) != (right.case, right.status):
            return False
        for name in ("rate_target", "ul_power", "dl_power", "rel_gap", "beta_resid", "q_resid"):
            x, y = getattr(left, name), getattr(right, name)
            if math.isnan(x) and math.isnan(y):
                continue
            if not np.isclose(x, y, rtol=rel_tol, atol=0.0):
                return False
    return True
