"""
Network instances, rate targets and strategy configurations.

Instances carry the channel, noise power and fronthaul capacities only;
beamformers live outside them so one instance can be solved under many
beamformer choices.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError, ParseError

logger = logging.getLogger(__name__)

# Relays whose beamformed load falls below this are inactive
INACTIVE_RELAY_THRESHOLD = 1e-12
UNIT_NORM_TOLERANCE = 1e-9

DEFAULT_NOISE_POWER = 1.0
DEFAULT_FRONTHAUL_CAP = 3.0


class FronthaulMode(str, Enum):
    IN = "IN"  # independent compression
    WZ = "WZ"  # Wyner-Ziv (uplink)
    MV = "MV"  # multivariate (downlink)


class UserMode(str, Enum):
    TIN = "TIN"
    SIC = "SIC"
    LIN = "LIN"
    DPC = "DPC"


class Case(str, Enum):
    """The four strategy combinations"""

    I = "I"
    II = "II"
    III = "III"
    IV = "IV"

    @classmethod
    def parse(cls, value: Union[str, "Case"]) -> "Case":
        if isinstance(value, Case):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            valid = ", ".join(c.value for c in cls)
            raise ConfigurationError(f"Unknown case '{value}'. Available: {valid}")

    @property
    def uses_wyner_ziv(self) -> bool:
        return self in (Case.III, Case.IV)

    @property
    def uses_sic(self) -> bool:
        return self in (Case.II, Case.IV)

    @property
    def uplink_fronthaul_mode(self) -> FronthaulMode:
        return FronthaulMode.WZ if self.uses_wyner_ziv else FronthaulMode.IN

    @property
    def uplink_user_mode(self) -> UserMode:
        return UserMode.SIC if self.uses_sic else UserMode.TIN

    @property
    def downlink_fronthaul_mode(self) -> FronthaulMode:
        return FronthaulMode.MV if self.uses_wyner_ziv else FronthaulMode.IN

    @property
    def downlink_user_mode(self) -> UserMode:
        return UserMode.DPC if self.uses_sic else UserMode.LIN


def _check_permutation(order: Sequence[int], size: int, name: str) -> Tuple[int, ...]:
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(size)):
        raise ConfigurationError(
            f"{name} must be a permutation of 0..{size - 1}, got {list(order)}"
        )
    return order


def parse_order(text: str, size: int, name: str = "order") -> Tuple[int, ...]:
    """Parse a 1-based comma-separated permutation into a 0-based tuple"""
    try:
        values = [int(tok) - 1 for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigurationError(f"{name} must be comma-separated integers: '{text}'")
    return _check_permutation(values, size, name)


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """Channel H (M x K), noise power sigma^2 and per-relay fronthaul caps C"""

    channel: np.ndarray
    noise_power: float = DEFAULT_NOISE_POWER
    fronthaul_caps: np.ndarray = None

    def __post_init__(self):
        channel = np.array(self.channel, dtype=complex)
        if channel.ndim != 2 or 0 in channel.shape:
            raise DimensionMismatchError(
                f"Channel must be a nonempty M x K matrix, got shape {channel.shape}"
            )
        if not np.all(np.isfinite(channel)):
            raise ConfigurationError("Channel entries must be finite")
        caps = self.fronthaul_caps
        if caps is None:
            caps = np.full(channel.shape[0], DEFAULT_FRONTHAUL_CAP)
        caps = np.array(caps, dtype=float).reshape(-1)
        if caps.shape[0] != channel.shape[0]:
            raise DimensionMismatchError(
                f"{caps.shape[0]} fronthaul caps for {channel.shape[0]} relays"
            )
        if not np.all(caps > 0) or not np.all(np.isfinite(caps)):
            raise ConfigurationError("Fronthaul capacities must be positive and finite")
        noise = float(self.noise_power)
        if not noise > 0 or not math.isfinite(noise):
            raise ConfigurationError("Noise power must be positive")
        channel.setflags(write=False)
        caps.setflags(write=False)
        object.__setattr__(self, "channel", channel)
        object.__setattr__(self, "fronthaul_caps", caps)
        object.__setattr__(self, "noise_power", noise)

    @property
    def num_relays(self) -> int:
        return self.channel.shape[0]

    @property
    def num_users(self) -> int:
        return self.channel.shape[1]

    @property
    def channel_gains(self) -> np.ndarray:
        """|h_{m,k}|^2 as an M x K array"""
        return np.abs(self.channel) ** 2

    def user_channel(self, k: int) -> np.ndarray:
        return self.channel[:, k]

    def with_fronthaul_caps(self, caps) -> "NetworkInstance":
        caps = np.broadcast_to(np.asarray(caps, dtype=float), (self.num_relays,))
        return NetworkInstance(self.channel, self.noise_power, caps)

    def with_noise_power(self, noise_power: float) -> "NetworkInstance":
        return NetworkInstance(self.channel, noise_power, self.fronthaul_caps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkInstance):
            return NotImplemented
        return (
            self.noise_power == other.noise_power
            and np.array_equal(self.channel, other.channel)
            and np.array_equal(self.fronthaul_caps, other.fronthaul_caps)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RateTargets:
    """Per-user rate targets R_k >= 0 in bits per symbol"""

    rates: np.ndarray

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float).reshape(-1)
        if rates.size == 0 or not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise ConfigurationError("Rate targets must be finite and nonnegative")
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def symmetric(cls, num_users: int, rate: float) -> "RateTargets":
        return cls(np.full(num_users, float(rate)))

    @property
    def num_users(self) -> int:
        return self.rates.shape[0]

    @property
    def sinr_targets(self) -> np.ndarray:
        """2^R - 1 per user"""
        return np.expm1(self.rates * math.log(2.0))

    def scaled(self, factor: float) -> "RateTargets":
        return RateTargets(self.rates * factor)


@dataclass(frozen=True)
class StrategyConfig:
    """
    Strategy case plus uplink decoding order tau and decompression order rho.

    Orders are 0-based permutations. Downlink orders are always derived by
    reversal: encoding order tau_dl(k) = tau(K-1-k), compression order
    rho_dl(m) = rho(M-1-m).
    """

    case: Case
    decode_order: Tuple[int, ...]
    decompress_order: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "case", Case.parse(self.case))
        object.__setattr__(
            self,
            "decode_order",
            _check_permutation(self.decode_order, len(self.decode_order), "decode_order"),
        )
        object.__setattr__(
            self,
            "decompress_order",
            _check_permutation(
                self.decompress_order, len(self.decompress_order), "decompress_order"
            ),
        )

    @classmethod
    def natural(cls, case: Union[str, Case], num_users: int, num_relays: int):
        return cls(Case.parse(case), tuple(range(num_users)), tuple(range(num_relays)))

    @property
    def downlink_encode_order(self) -> Tuple[int, ...]:
        return tuple(reversed(self.decode_order))

    @property
    def downlink_compress_order(self) -> Tuple[int, ...]:
        return tuple(reversed(self.decompress_order))

    def check_dimensions(self, instance: NetworkInstance) -> None:
        if len(self.decode_order) != instance.num_users:
            raise DimensionMismatchError(
                f"decode_order has {len(self.decode_order)} entries for "
                f"{instance.num_users} users"
            )
        if len(self.decompress_order) != instance.num_relays:
            raise DimensionMismatchError(
                f"decompress_order has {len(self.decompress_order)} entries for "
                f"{instance.num_relays} relays"
            )


def generate_rayleigh(
    num_relays: int,
    num_users: int,
    seed: int,
    noise_power: float = DEFAULT_NOISE_POWER,
    fronthaul_cap: float = DEFAULT_FRONTHAUL_CAP,
) -> NetworkInstance:
    """
    I.i.d. CN(0, 1) channel from a Philox counter-based generator.

    Gaussians come from the Box-Muller transform of Philox uniforms, so the
    stream depends only on the seed and numpy's Philox implementation.
    """
    if num_relays < 1 or num_users < 1:
        raise ConfigurationError("Need at least one relay and one user")
    if not 0 <= int(seed) < 2**64:
        raise ConfigurationError("Seed must be an unsigned 64-bit integer")
    generator = np.random.Generator(np.random.Philox(int(seed)))
    u1, u2 = generator.random((2, num_relays * num_users))
    # 1 - u1 lies in (0, 1]
    radius = np.sqrt(-np.log1p(-u1))
    phase = 2.0 * np.pi * u2
    channel = (radius * np.exp(1j * phase)).reshape(num_relays, num_users)
    return NetworkInstance(
        channel, noise_power, np.full(num_relays, float(fronthaul_cap))
    )


@dataclass
class ValidationReport:
    """Beamformer checks against an instance"""

    inactive_relays: List[int] = field(default_factory=list)
    non_unit_columns: List[int] = field(default_factory=list)
    relay_loads: Optional[np.ndarray] = None  # sum_k |u_{k,m}|^2

    @property
    def is_clean(self) -> bool:
        return not self.inactive_relays and not self.non_unit_columns


def _check_beamformer_shape(instance: NetworkInstance, beamformers) -> np.ndarray:
    u = np.asarray(beamformers, dtype=complex)
    if u.shape != (instance.num_relays, instance.num_users):
        raise DimensionMismatchError(
            f"Beamformers have shape {u.shape}, expected "
            f"({instance.num_relays}, {instance.num_users})"
        )
    return u


def validate(instance: NetworkInstance, beamformers) -> ValidationReport:
    """Flag relays with no beamformed load and columns that are not unit norm"""
    u = _check_beamformer_shape(instance, beamformers)
    loads = np.sum(np.abs(u) ** 2, axis=1)
    norms = np.sum(np.abs(u) ** 2, axis=0)
    report = ValidationReport(
        inactive_relays=[int(m) for m in np.flatnonzero(loads <= INACTIVE_RELAY_THRESHOLD)],
        non_unit_columns=[
            int(k) for k in np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE)
        ],
        relay_loads=loads,
    )
    if not report.is_clean:
        logger.debug(
            "Beamformer validation: inactive relays %s, non-unit columns %s",
            report.inactive_relays,
            report.non_unit_columns,
        )
    return report


def drop_inactive_relays(
    instance: NetworkInstance, beamformers
) -> Tuple[NetworkInstance, np.ndarray, List[int]]:
    """
    Reduce to the active relay set.

    Returns the reduced instance, the reduced beamformers with columns
    renormalized, and the kept relay ids.
    """
    u = _check_beamformer_shape(instance, beamformers)
    report = validate(instance, u)
    kept = [m for m in range(instance.num_relays) if m not in report.inactive_relays]
    if not kept:
        raise ConfigurationError("Every relay is inactive under these beamformers")
    reduced = u[kept, :]
    norms = np.linalg.norm(reduced, axis=0)
    if np.any(norms == 0):
        raise ConfigurationError("A beamformer column vanishes on the active relays")
    reduced_instance = NetworkInstance(
        instance.channel[kept, :],
        instance.noise_power,
        instance.fronthaul_caps[kept],
    )
    return reduced_instance, reduced / norms, kept


def instance_to_dict(instance: NetworkInstance) -> Dict[str, Any]:
    return {
        "M": instance.num_relays,
        "K": instance.num_users,
        "sigma2": instance.noise_power,
        "caps": [float(c) for c in instance.fronthaul_caps],
        "H": [
            [[float(h.real), float(h.imag)] for h in row] for row in instance.channel
        ],
    }


def save_instance(instance: NetworkInstance, path: Union[str, Path]) -> Path:
    """Write the instance as JSON; floats use shortest round-trip text"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(instance_to_dict(instance), f, indent=2)
        f.write("\n")
    return path


def _require(data: Dict[str, Any], key: str, path: Optional[str]):
    if key not in data:
        raise ParseError("missing required field", path=path, field=key)
    return data[key]


def _parse_channel(raw, num_relays: int, num_users: int, path: Optional[str]):
    if not isinstance(raw, list):
        raise ParseError("must be a list of [re, im] pairs", path=path, field="H")
    try:
        entries = np.array(raw, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"malformed entries ({e})", path=path, field="H")
    if entries.ndim == 2 and entries.shape[-1] == 2:
        # flat row-major list of pairs
        if entries.shape[0] != num_relays * num_users:
            raise DimensionMismatchError(
                f"H has {entries.shape[0]} entries, expected M*K = "
                f"{num_relays * num_users}"
            )
        entries = entries.reshape(num_relays, num_users, 2)
    elif entries.ndim == 3 and entries.shape[-1] == 2:
        if entries.shape[:2] != (num_relays, num_users):
            raise DimensionMismatchError(
                f"H has shape {entries.shape[0]}x{entries.shape[1]}, declared "
                f"M={num_relays}, K={num_users}"
            )
    else:
        raise ParseError("entries must be [re, im] pairs", path=path, field="H")
    return entries[..., 0] + 1j * entries[..., 1]


def instance_from_dict(data: Dict[str, Any], path: Optional[str] = None) -> NetworkInstance:
    """Build an instance from the key/value form (M, K, sigma2, caps, H)"""
    if not isinstance(data, dict):
        raise ParseError("top level must be a key/value object", path=path)
    try:
        num_relays = int(_require(data, "M", path))
        num_users = int(_require(data, "K", path))
    except (TypeError, ValueError):
        raise ParseError("M and K must be integers", path=path, field="M/K")
    if num_relays < 1 or num_users < 1:
        raise ParseError("M and K must be positive", path=path, field="M/K")
    try:
        sigma2 = float(data.get("sigma2", DEFAULT_NOISE_POWER))
    except (TypeError, ValueError):
        raise ParseError("must be a number", path=path, field="sigma2")
    if not sigma2 > 0:
        raise ParseError("noise power must be positive", path=path, field="sigma2")
    raw_caps = data.get("caps", [DEFAULT_FRONTHAUL_CAP] * num_relays)
    if not isinstance(raw_caps, list):
        raw_caps = [raw_caps] * num_relays
    try:
        caps = [float(c) for c in raw_caps]
    except (TypeError, ValueError):
        raise ParseError("capacities must be numbers", path=path, field="caps")
    if len(caps) != num_relays:
        raise DimensionMismatchError(f"{len(caps)} caps declared for M={num_relays}")
    for m, c in enumerate(caps):
        if not c > 0:
            raise ParseError("capacities must be positive", path=path, field=f"caps[{m}]")
    channel = _parse_channel(_require(data, "H", path), num_relays, num_users, path)
    return NetworkInstance(channel, sigma2, np.array(caps))


def load_instance(path: Union[str, Path]) -> NetworkInstance:
    """Load an instance file (UTF-8 JSON key/value format)"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read file ({e.strerror})", path=str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=str(path), line=e.lineno)
    return instance_from_dict(data, path=str(path))
