import pytest

from radgas.flux import FluxConfig
from radgas.stationary import EndpointStates, shoot_profile


@pytest.fixture(scope="session")
def burgers():
    return FluxConfig()


@pytest.fixture(scope="session")
def nd_profile(burgers):
    return shoot_profile(burgers, EndpointStates(-1.0, -0.2), 80.0, 4096, tol=1e-10)


@pytest.fixture(scope="session")
def d_profile(burgers):
    return shoot_profile(burgers, EndpointStates(-0.5, 0.0), 400.0, 8192)
