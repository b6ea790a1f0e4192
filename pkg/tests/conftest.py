"""Shared instances for the test suite"""

import numpy as np
import pytest

from core.channel_model import NetworkInstance, RateTargets, StrategyConfig, generate_rayleigh


@pytest.fixture
def analytic_instance():
    """One relay, one user, |h| = 1, sigma^2 = 1, C = 2"""
    return NetworkInstance(np.array([[1.0]]), 1.0, [2.0])


@pytest.fixture
def unit_rate():
    return RateTargets.symmetric(1, 1.0)


@pytest.fixture
def two_relay_instance():
    """Two relays seeing one user through h = (1, 1), C = (2, 2)"""
    return NetworkInstance(np.array([[1.0], [1.0]]), 1.0, [2.0, 2.0])


@pytest.fixture
def seeded_instance():
    """Three relays, three users, sigma^2 = 1, C = 3"""
    return generate_rayleigh(3, 3, seed=7, noise_power=1.0, fronthaul_cap=3.0)


@pytest.fixture
def natural_config():
    def make(case, instance):
        return StrategyConfig.natural(case, instance.num_users, instance.num_relays)

    return make
