import cmath
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from qcore import SpinParams

settings.register_profile(
    "susy_chain",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("susy_chain")


def nonzero_y():
    """Deformation parameters with 0.3 <= |y| <= 2."""
    return st.builds(
        lambda rho, theta: cmath.rect(rho, theta),
        st.floats(0.3, 2.0),
        st.floats(0.0, 2.0 * math.pi),
    )


def any_y():
    return st.one_of(st.just(0j), nonzero_y())


@pytest.fixture
def ell1():
    return SpinParams(1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
