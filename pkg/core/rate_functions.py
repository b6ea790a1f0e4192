"""
Rate and fronthaul-rate formulas for both link directions and all cases.

Rates are in bits per symbol. Logarithms are taken in natural base and
converted once.

Order conventions (0-based permutations):
  - SIC / DPC: a user is interfered only by users later in its order.
  - WZ / MV: a relay is compressed conditionally on the relays earlier in
    its order.
"""

import math
from dataclasses import dataclass
from functools import singledispatch
from typing import Optional, Sequence

import numpy as np

from .channel_model import UNIT_NORM_TOLERANCE, FronthaulMode, NetworkInstance, UserMode
from .errors import (
    DimensionMismatchError,
    InvalidPointError,
    NotPositiveDefiniteError,
    SingularConditioningBlockError,
    ZeroQuantizationNoiseError,
)
from .hermitian_core import (
    HermitianMatrix,
    conditional_variance,
    min_eigen_psd_check,
    schur_complement,
)

LN2 = math.log(2.0)
SINGULAR_DENOMINATOR = 1e-14


def _to_bits(ratio) -> np.ndarray:
    return np.log(ratio) / LN2


def _check_unit_columns(beamformers: np.ndarray, name: str) -> None:
    norms = np.sum(np.abs(beamformers) ** 2, axis=0)
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE)
    if bad.size:
        raise InvalidPointError(f"{name} columns {bad.tolist()} are not unit norm")


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UplinkPoint:
    """User powers p, quantization noises q and unit-norm receive beamformers W"""

    powers: np.ndarray
    quantization_noises: np.ndarray
    beamformers: np.ndarray

    def __post_init__(self):
        p = _frozen(np.reshape(self.powers, -1))
        q = _frozen(np.reshape(self.quantization_noises, -1))
        w = _frozen(self.beamformers, complex)
        if w.ndim != 2 or w.shape != (q.shape[0], p.shape[0]):
            raise DimensionMismatchError(
                f"Beamformers {w.shape} do not match M={q.shape[0]}, K={p.shape[0]}"
            )
        if np.any(p < 0) or np.any(q < 0):
            raise InvalidPointError("Powers and quantization noises must be >= 0")
        _check_unit_columns(w, "Receive beamformer")
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "quantization_noises", q)
        object.__setattr__(self, "beamformers", w)


@dataclass(frozen=True, eq=False)
class DownlinkPoint:
    """User powers p, quantization covariance Q and unit-norm transmit beamformers V"""

    powers: np.ndarray
    quantization_covariance: HermitianMatrix
    beamformers: np.ndarray

    def __post_init__(self):
        p = _frozen(np.reshape(self.powers, -1))
        cov = self.quantization_covariance
        if not isinstance(cov, HermitianMatrix):
            cov = HermitianMatrix(cov)
        v = _frozen(self.beamformers, complex)
        if v.ndim != 2 or v.shape != (cov.dim, p.shape[0]):
            raise DimensionMismatchError(
                f"Beamformers {v.shape} do not match M={cov.dim}, K={p.shape[0]}"
            )
        if np.any(p < 0):
            raise InvalidPointError("Powers must be >= 0")
        if not min_eigen_psd_check(cov):
            raise InvalidPointError("Quantization covariance is not PSD")
        _check_unit_columns(v, "Transmit beamformer")
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "quantization_covariance", cov)
        object.__setattr__(self, "beamformers", v)


def _order_or_identity(order: Optional[Sequence[int]], size: int) -> np.ndarray:
    if order is None:
        return np.arange(size)
    order = np.asarray(order, dtype=int)
    if sorted(order.tolist()) != list(range(size)):
        raise DimensionMismatchError(f"Order {order.tolist()} is not a permutation of {size}")
    return order


def interference_mask(
    num_users: int, mode: UserMode, order: Optional[Sequence[int]] = None
) -> np.ndarray:
    """
    Boolean K x K mask, mask[k, j] true when user j interferes with user k.

    TIN/LIN: every other user. SIC/DPC: users later than k in the order.
    """
    mode = UserMode(mode)
    if mode in (UserMode.TIN, UserMode.LIN):
        return ~np.eye(num_users, dtype=bool)
    order = _order_or_identity(order, num_users)
    position = np.empty(num_users, dtype=int)
    position[order] = np.arange(num_users)
    return position[None, :] > position[:, None]


def gamma_covariance(
    instance: NetworkInstance, point: UplinkPoint, order: Optional[Sequence[int]] = None
) -> HermitianMatrix:
    """Gamma = sum_k p_k h_k h_k^H + sigma^2 I + diag(q), reindexed by the order"""
    h = instance.channel
    gamma = (h * point.powers) @ h.conj().T
    gamma = gamma + np.diag(instance.noise_power + point.quantization_noises)
    order = _order_or_identity(order, instance.num_relays)
    return HermitianMatrix(gamma[np.ix_(order, order)])


def uplink_fronthaul_rates(
    instance: NetworkInstance,
    point: UplinkPoint,
    mode: FronthaulMode,
    order: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Per-relay fronthaul rates, indexed by relay id whatever the order"""
    q = point.quantization_noises
    if np.any(q <= 0):
        raise ZeroQuantizationNoiseError(
            f"Relays {np.flatnonzero(q <= 0).tolist()} have zero quantization noise"
        )
    mode = FronthaulMode(mode)
    if mode == FronthaulMode.IN:
        received = instance.channel_gains @ point.powers + instance.noise_power
        return _to_bits((received + q) / q)
    if mode != FronthaulMode.WZ:
        raise ValueError(f"Uplink fronthaul mode must be IN or WZ, got {mode}")
    order = _order_or_identity(order, instance.num_relays)
    gamma = gamma_covariance(instance, point, order)
    rates = np.empty(instance.num_relays)
    for position, relay in enumerate(order):
        rates[relay] = _to_bits(schur_complement(gamma, position + 1) / q[relay])
    return rates


def uplink_user_rates(
    instance: NetworkInstance,
    point: UplinkPoint,
    mode: UserMode,
    order: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Per-user rates with beamformed quantization noise sum_m q_m |w_{k,m}|^2"""
    w = point.beamformers
    p = point.powers
    # coupling[k, j] = |w_k^H h_j|^2
    coupling = np.abs(w.conj().T @ instance.channel) ** 2
    mask = interference_mask(instance.num_users, mode, order)
    interference = np.sum(np.where(mask, coupling * p[None, :], 0.0), axis=1)
    quantization = (np.abs(w) ** 2).T @ point.quantization_noises
    noise = instance.noise_power * np.sum(np.abs(w) ** 2, axis=0)
    sinr = p * coupling.diagonal() / (interference + quantization + noise)
    return np.log1p(sinr) / LN2


def downlink_fronthaul_rates(
    instance: NetworkInstance,
    point: DownlinkPoint,
    mode: FronthaulMode,
    order: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Per-relay downlink fronthaul rates, indexed by relay id.

    MV: the denominator of relay order[i] is the Schur complement of Q over
    the relays order[:i] compressed before it.
    """
    q = point.quantization_covariance.entries
    load = np.sum(np.abs(point.beamformers) ** 2 * point.powers[None, :], axis=1)
    diag = q.diagonal().real
    mode = FronthaulMode(mode)
    if mode == FronthaulMode.IN:
        if np.any(diag <= 0):
            raise ZeroQuantizationNoiseError(
                f"Relays {np.flatnonzero(diag <= 0).tolist()} have zero quantization noise"
            )
        return _to_bits((load + diag) / diag)
    if mode != FronthaulMode.MV:
        raise ValueError(f"Downlink fronthaul mode must be IN or MV, got {mode}")
    order = _order_or_identity(order, instance.num_relays)
    rates = np.empty(instance.num_relays)
    for position, relay in enumerate(order):
        try:
            denominator = conditional_variance(q, relay, order[:position])
        except NotPositiveDefiniteError as e:
            raise SingularConditioningBlockError(
                f"Conditioning block of relay {relay} is singular: {e}"
            ) from e
        if denominator <= SINGULAR_DENOMINATOR:
            raise SingularConditioningBlockError(
                f"Relay {relay} has Schur denominator {denominator:.3e}"
            )
        rates[relay] = _to_bits((load[relay] + diag[relay]) / denominator)
    return rates


def downlink_user_rates(
    instance: NetworkInstance,
    point: DownlinkPoint,
    mode: UserMode,
    order: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Per-user downlink rates with quantization interference h_k^H Q h_k"""
    h = instance.channel
    p = point.powers
    # coupling[k, j] = |h_k^H v_j|^2
    coupling = np.abs(h.conj().T @ point.beamformers) ** 2
    mask = interference_mask(instance.num_users, mode, order)
    interference = np.sum(np.where(mask, coupling * p[None, :], 0.0), axis=1)
    q = point.quantization_covariance.entries
    quantization = np.einsum("mk,mn,nk->k", h.conj(), q, h).real
    sinr = p * coupling.diagonal() / (interference + quantization + instance.noise_power)
    return np.log1p(sinr) / LN2


@singledispatch
def sum_powers(point) -> float:
    raise TypeError(f"Unsupported point type {type(point).__name__}")


@sum_powers.register
def _(point: UplinkPoint) -> float:
    return float(np.sum(point.powers))


@sum_powers.register
def _(point: DownlinkPoint) -> float:
    return float(np.sum(point.powers) + point.quantization_covariance.trace())
