import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.channel_model import FronthaulMode, NetworkInstance, UserMode, generate_rayleigh
from core.errors import (
    InvalidPointError,
    SingularConditioningBlockError,
    ZeroQuantizationNoiseError,
)
from core.hermitian_core import HermitianMatrix
from core.rate_functions import (
    DownlinkPoint,
    UplinkPoint,
    downlink_fronthaul_rates,
    downlink_user_rates,
    gamma_covariance,
    interference_mask,
    sum_powers,
    uplink_fronthaul_rates,
    uplink_user_rates,
)

SPLIT = np.array([[1.0], [1.0]]) / math.sqrt(2.0)


class TestPoints:
    def test_negative_power_rejected(self):
        with pytest.raises(InvalidPointError):
            UplinkPoint([-1.0], [1.0], [[1.0]])

    def test_non_unit_beamformer_rejected(self):
        with pytest.raises(InvalidPointError):
            UplinkPoint([1.0], [1.0], [[0.5]])

    def test_non_psd_covariance_rejected(self):
        with pytest.raises(InvalidPointError):
            DownlinkPoint([1.0], [[1.0, 2.0], [2.0, 1.0]], SPLIT)

    def test_sum_powers(self):
        assert sum_powers(UplinkPoint([2.0], [1.0], [[1.0]])) == 2.0
        assert sum_powers(DownlinkPoint([1.5], HermitianMatrix.diagonal([0.5]), [[1.0]])) == 2.0
        zero = DownlinkPoint([0.0, 0.0], HermitianMatrix.zeros(2), np.eye(2))
        assert sum_powers(zero) == 0.0

    def test_sum_powers_unsupported(self):
        with pytest.raises(TypeError):
            sum_powers([1.0])


class TestInterferenceMask:
    def test_tin_everyone_else(self):
        mask = interference_mask(3, UserMode.TIN)
        assert mask.sum() == 6
        assert not mask.diagonal().any()

    def test_sic_later_users_only(self):
        mask = interference_mask(3, UserMode.SIC, (2, 0, 1))
        # user 2 decoded first sees users 0 and 1; user 1 decoded last sees nobody
        assert mask[2].tolist() == [True, True, False]
        assert mask[0].tolist() == [False, True, False]
        assert not mask[1].any()


class TestGamma:
    def test_noise_only(self):
        instance = generate_rayleigh(2, 2, seed=4)
        point = UplinkPoint([0.0, 0.0], [0.0, 0.0], np.eye(2))
        assert_allclose(gamma_covariance(instance, point).entries, np.eye(2))

    def test_two_relays(self, two_relay_instance):
        point = UplinkPoint([2.0], [1.0, 1.0], SPLIT)
        assert_allclose(gamma_covariance(two_relay_instance, point).entries, [[4, 2], [2, 4]])


class TestUplinkFronthaul:
    def test_in_noise_only(self, analytic_instance):
        point = UplinkPoint([0.0], [1.0], [[1.0]])
        assert_allclose(uplink_fronthaul_rates(analytic_instance, point, FronthaulMode.IN), [1.0])

    def test_in_single_user(self, analytic_instance):
        point = UplinkPoint([2.0], [1.0], [[1.0]])
        assert_allclose(uplink_fronthaul_rates(analytic_instance, point, FronthaulMode.IN), [2.0])

    def test_wz_single_relay_equals_in(self, analytic_instance):
        point = UplinkPoint([0.7], [0.3], [[1.0]])
        assert_allclose(
            uplink_fronthaul_rates(analytic_instance, point, FronthaulMode.WZ),
            uplink_fronthaul_rates(analytic_instance, point, FronthaulMode.IN),
        )

    def test_wz_side_information(self, two_relay_instance):
        point = UplinkPoint([2.0], [1.0, 1.0], SPLIT)
        rates = uplink_fronthaul_rates(two_relay_instance, point, FronthaulMode.WZ, (0, 1))
        assert_allclose(rates, [2.0, math.log2(3.0)], rtol=1e-12)
        # reversing the order moves the side information to relay 0
        reversed_rates = uplink_fronthaul_rates(two_relay_instance, point, FronthaulMode.WZ, (1, 0))
        assert_allclose(reversed_rates, [math.log2(3.0), 2.0], rtol=1e-12)

    def test_zero_noise_raises(self, analytic_instance):
        point = UplinkPoint([1.0], [0.0], [[1.0]])
        with pytest.raises(ZeroQuantizationNoiseError):
            uplink_fronthaul_rates(analytic_instance, point, FronthaulMode.IN)


class TestUplinkUserRates:
    def test_single_user(self, analytic_instance):
        point = UplinkPoint([2.0], [1.0], [[1.0]])
        assert_allclose(uplink_user_rates(analytic_instance, point, UserMode.TIN), [1.0])

    def test_zero_power(self):
        instance = generate_rayleigh(2, 2, seed=8)
        point = UplinkPoint([0.0, 0.0], [0.5, 0.5], np.eye(2))
        assert_allclose(uplink_user_rates(instance, point, UserMode.TIN), [0.0, 0.0])

    def test_sic_never_below_tin(self):
        instance = generate_rayleigh(2, 3, seed=8)
        w = instance.channel / np.linalg.norm(instance.channel, axis=0)
        point = UplinkPoint([1.0, 2.0, 0.5], [0.2, 0.3], w)
        tin = uplink_user_rates(instance, point, UserMode.TIN)
        sic = uplink_user_rates(instance, point, UserMode.SIC, (0, 1, 2))
        assert np.all(sic >= tin - 1e-12)
        # the last decoded user sees no interference
        assert sic[2] > tin[2]


class TestDownlinkFronthaul:
    def test_single_relay(self, analytic_instance):
        point = DownlinkPoint([1.5], HermitianMatrix.diagonal([0.5]), [[1.0]])
        assert_allclose(downlink_fronthaul_rates(analytic_instance, point, FronthaulMode.IN), [2.0])

    def test_mv_diagonal_equals_in(self, two_relay_instance):
        point = DownlinkPoint([1.0], HermitianMatrix.diagonal([0.4, 0.7]), SPLIT)
        assert_allclose(
            downlink_fronthaul_rates(two_relay_instance, point, FronthaulMode.MV, (1, 0)),
            downlink_fronthaul_rates(two_relay_instance, point, FronthaulMode.IN),
        )

    def test_mv_correlation_costs_the_later_relay(self, two_relay_instance):
        cov = HermitianMatrix([[1.0, 0.5], [0.5, 1.0]])
        point = DownlinkPoint([1.0], cov, SPLIT)
        rates = downlink_fronthaul_rates(two_relay_instance, point, FronthaulMode.MV, (0, 1))
        # relay 0 first: plain variance; relay 1 conditioned on relay 0: 1 - 0.25
        assert_allclose(rates, [math.log2(1.5), math.log2(1.5 / 0.75)], rtol=1e-12)

    def test_mv_singular_block(self, two_relay_instance):
        point = DownlinkPoint([1.0], HermitianMatrix([[1.0, 1.0], [1.0, 1.0]]), SPLIT)
        with pytest.raises(SingularConditioningBlockError):
            downlink_fronthaul_rates(two_relay_instance, point, FronthaulMode.MV, (0, 1))

    def test_in_zero_noise(self, analytic_instance):
        point = DownlinkPoint([1.0], HermitianMatrix.zeros(1), [[1.0]])
        with pytest.raises(ZeroQuantizationNoiseError):
            downlink_fronthaul_rates(analytic_instance, point, FronthaulMode.IN)


class TestDownlinkUserRates:
    def test_single_user(self, analytic_instance):
        point = DownlinkPoint([1.5], HermitianMatrix.diagonal([0.5]), [[1.0]])
        assert_allclose(downlink_user_rates(analytic_instance, point, UserMode.LIN), [1.0])

    def test_zero_power(self):
        instance = generate_rayleigh(2, 2, seed=8)
        point = DownlinkPoint([0.0, 0.0], HermitianMatrix.diagonal([0.1, 0.1]), np.eye(2))
        assert_allclose(downlink_user_rates(instance, point, UserMode.LIN), [0.0, 0.0])

    def test_dpc_single_user_equals_lin(self, analytic_instance):
        point = DownlinkPoint([0.8], HermitianMatrix.diagonal([0.3]), [[1.0]])
        assert_allclose(
            downlink_user_rates(analytic_instance, point, UserMode.DPC, (0,)),
            downlink_user_rates(analytic_instance, point, UserMode.LIN),
        )

    def test_quantization_noise_is_shaped_by_the_channel(self):
        instance = NetworkInstance(np.array([[1.0], [-1.0]]), 1.0, [2.0, 2.0])
        beamformer = np.array([[1.0], [-1.0]]) / math.sqrt(2.0)
        # noise aligned with h = (1, -1) is seen at 2x its trace, anti-aligned noise vanishes
        aligned = DownlinkPoint([1.0], HermitianMatrix([[0.5, -0.5], [-0.5, 0.5]]), beamformer)
        opposed = DownlinkPoint([1.0], HermitianMatrix([[0.5, 0.5], [0.5, 0.5]]), beamformer)
        assert_allclose(downlink_user_rates(instance, aligned, UserMode.LIN), [math.log2(1 + 2 / 3)])
        assert_allclose(downlink_user_rates(instance, opposed, UserMode.LIN), [math.log2(3.0)])


def _unit_columns(rng, rows, cols):
    w = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return w / np.linalg.norm(w, axis=0)


class TestMonotonicity:
    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("mode,order", [(UserMode.TIN, None), (UserMode.SIC, (2, 0, 1))])
    def test_uplink_user_rates_fall_with_quantization_noise(self, seed, mode, order):
        instance = generate_rayleigh(3, 3, seed=seed)
        rng = np.random.default_rng(seed)
        p = rng.uniform(0.1, 2.0, 3)
        q = rng.uniform(0.1, 1.0, 3)
        w = _unit_columns(rng, 3, 3)
        base = uplink_user_rates(instance, UplinkPoint(p, q, w), mode, order)
        for relay in range(3):
            bumped = q.copy()
            bumped[relay] += rng.uniform(0.1, 1.0)
            rates = uplink_user_rates(instance, UplinkPoint(p, bumped, w), mode, order)
            assert np.all(rates <= base + 1e-12)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("mode,order", [(UserMode.LIN, None), (UserMode.DPC, (1, 2, 0))])
    def test_downlink_user_rates_fall_with_diagonal_inflation(self, seed, mode, order):
        instance = generate_rayleigh(3, 3, seed=seed)
        rng = np.random.default_rng(seed)
        p = rng.uniform(0.1, 2.0, 3)
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        cov = b @ b.conj().T / 3 + 0.1 * np.eye(3)
        v = _unit_columns(rng, 3, 3)
        base = downlink_user_rates(instance, DownlinkPoint(p, cov, v), mode, order)
        inflated = cov + np.diag(rng.uniform(0.0, 1.0, 3))
        rates = downlink_user_rates(instance, DownlinkPoint(p, inflated, v), mode, order)
        assert np.all(rates <= base + 1e-12)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("fronthaul", [FronthaulMode.IN, FronthaulMode.WZ])
    def test_uplink_fronthaul_rates_grow_with_power(self, seed, fronthaul):
        instance = generate_rayleigh(3, 3, seed=seed)
        rng = np.random.default_rng(seed)
        p = rng.uniform(0.1, 2.0, 3)
        q = rng.uniform(0.1, 1.0, 3)
        w = _unit_columns(rng, 3, 3)
        base = uplink_fronthaul_rates(instance, UplinkPoint(p, q, w), fronthaul, (1, 0, 2))
        for user in range(3):
            bumped = p.copy()
            bumped[user] += rng.uniform(0.1, 1.0)
            rates = uplink_fronthaul_rates(instance, UplinkPoint(bumped, q, w), fronthaul, (1, 0, 2))
            assert np.all(rates >= base - 1e-12)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("fronthaul", [FronthaulMode.IN, FronthaulMode.MV])
    def test_downlink_fronthaul_rates_grow_with_power(self, seed, fronthaul):
        instance = generate_rayleigh(3, 3, seed=seed)
        rng = np.random.default_rng(seed)
        p = rng.uniform(0.1, 2.0, 3)
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        cov = b @ b.conj().T / 3 + 0.1 * np.eye(3)
        v = _unit_columns(rng, 3, 3)
        base = downlink_fronthaul_rates(instance, DownlinkPoint(p, cov, v), fronthaul, (2, 1, 0))
        for user in range(3):
            bumped = p.copy()
            bumped[user] += rng.uniform(0.1, 1.0)
            rates = downlink_fronthaul_rates(
                instance, DownlinkPoint(bumped, cov, v), fronthaul, (2, 1, 0)
            )
            assert np.all(rates >= base - 1e-12)
