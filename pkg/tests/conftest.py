import numpy as np
import pytest

import delaylab as dl


@pytest.fixture
def demo_schedule():
    """Scalar demo schedule: [0, 2, 3, 5], tau = 1."""
    return dl.build_schedule([0.0, 2.0, 3.0, 5.0], delay=1.0, horizon=5.0)


@pytest.fixture
def demo_system():
    """Scalar demo system: u' = -u + 0.5 u(t-1) on feedback intervals."""
    return dl.build_scalar(1.0, b_values=(0.5,))


@pytest.fixture
def demo_env():
    """Exact envelope for the scalar demo."""
    return dl.SemigroupEnvelope(M=1.0, mu=1.0, strategy="pinned", certified=True)


@pytest.fixture
def demo_trajectory(demo_system, demo_schedule):
    return dl.simulate(demo_system, demo_schedule, np.array([1.0]), 1e-3, 5.0)
