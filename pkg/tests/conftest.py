import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spectral_kde.geometry import SU2, Circle, JacobiInterval, Sphere2

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

SPACES = {
    "circle": Circle(),
    "jacobi": JacobiInterval(),
    "jacobi_asym": JacobiInterval(1.0, 0.5),
    "sphere2": Sphere2(),
    "su2": SU2(),
}


@pytest.fixture(params=list(SPACES), ids=list(SPACES))
def space(request):
    return SPACES[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
