import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from fatigue import validate_spec

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def ab1():
    """u(a) = 1, u(b) = 10 at full fatigue."""
    return validate_spec({"a": 1, "b": 10}, gamma=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spec(rng, n_max=4, u_max=10.0, allow_zero=True, n_min=1):
    n = int(rng.integers(n_min, n_max + 1))
    u = rng.uniform(0, u_max, size=n)
    if allow_zero and rng.random() < 0.15:
        u[rng.integers(n)] = 0.0
    gamma = float(rng.uniform(0.01, 1.0))
    return validate_spec({f"x{i}": float(v) for i, v in enumerate(u)}, gamma=gamma)


@st.composite
def specs(draw, n_max=4, positive=False):
    n = draw(st.integers(1, n_max))
    lo = 0.01 if positive else 0.0
    u = draw(st.lists(st.floats(lo, 10.0, allow_nan=False), min_size=n, max_size=n))
    gamma = draw(st.floats(0.01, 1.0))
    return validate_spec({f"x{i}": v for i, v in enumerate(u)}, gamma=gamma)
