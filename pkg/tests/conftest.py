import pytest
from hypothesis import HealthCheck, settings

from akszcoh.qtarget import lie_algebra_target
from akszcoh.specfile import parse_spec
from helpers import SU2_F

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def su2_doc():
    return parse_spec("su2")


@pytest.fixture(scope="session")
def psm_doc():
    return parse_spec("psm_su2")


@pytest.fixture(scope="session")
def su2():
    return lie_algebra_target(SU2_F, label="su2")


@pytest.fixture(scope="session")
def abelian():
    return lie_algebra_target({}, dimension=1, label="u1")
