import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def pc_ref():
    """Reference phase point (beta=2, theta=0.1) and its constants."""
    from kacfield.phase import PhasePoint, phase_constants

    point = PhasePoint(2.0, 0.1)
    return point, phase_constants(point)


@pytest.fixture(scope="session")
def pc_full(pc_ref):
    """Reference constants completed with the surface tension."""
    from kacfield.profiles import instanton

    point, pc = pc_ref
    _, f_star = instanton(pc, 20.0, 1.0 / 64.0)
    return point, pc.with_f_star(f_star)
