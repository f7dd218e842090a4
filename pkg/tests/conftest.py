from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from digflow import euclidean_model
from digflow.gaussian import gaussian_model

settings.register_profile(
    "digflow",
    deadline=None,
    max_examples=30,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("digflow")

mus = st.floats(-3.0, 3.0, allow_nan=False)
sigmas = st.floats(0.5, 4.0, allow_nan=False)
gaussian_points = st.tuples(mus, sigmas).map(np.array)


@pytest.fixture(scope="session")
def gauss():
    return gaussian_model()


@pytest.fixture(scope="session")
def flat2():
    return euclidean_model(2)
