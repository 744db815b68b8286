import numpy as np
import pytest
from hypothesis import strategies as st


def complexes(scale=1.0, min_abs=0.0):
    """Bounded complex numbers, optionally kept away from 0."""
    part = st.floats(min_value=-scale, max_value=scale, allow_nan=False, allow_infinity=False)
    return st.builds(complex, part, part).filter(lambda z: abs(z) >= min_abs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cz(rng, scale=1.0):
    return complex(*rng.normal(size=2)) * scale
