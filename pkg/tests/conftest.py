import pytest
from hypothesis import HealthCheck, settings

from hvdcsim import SystemParams, table_gains

settings.register_profile(
    "sim", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("sim")


@pytest.fixture(scope="session")
def default_params() -> SystemParams:
    return SystemParams()


@pytest.fixture(scope="session")
def holistic_gains():
    return table_gains("holistic")


@pytest.fixture(scope="session")
def eb_gains():
    return table_gains("energy_balancing")
