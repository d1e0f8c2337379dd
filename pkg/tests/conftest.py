"""Shared fixtures: canonical systems, grids, and deterministic hypothesis setup.

The scalar test system is xdot = -x + u over the window [-2, 2] with the
three-point control sample {-1, 0, 1}; the planar systems are the stable
diagonal matrix diag(-1, -2) and the rotation closed loop obtained from it
by feedback.  Closed-form flows for both families live in koopsets.oracles.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from koopsets import (
    Bump,
    ControlSampleSet,
    SpatialGrid,
    VectorFieldSpec,
)

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def scalar_field():
    return VectorFieldSpec.scalar_affine(-1.0)


@pytest.fixture(scope="session")
def sample3():
    """Control sample {-1, 0, 1}: ids 0, 1, 2."""
    return ControlSampleSet([[-1.0], [0.0], [1.0]])


@pytest.fixture(scope="session")
def sample2():
    """Non-convex control sample {-1, 1}: ids 0, 1."""
    return ControlSampleSet([[-1.0], [1.0]])


@pytest.fixture(scope="session")
def grid401():
    return SpatialGrid([-2.0], [2.0], 401)


@pytest.fixture(scope="session")
def grid5():
    """Integer nodes -2..2; bump values at these nodes are dyadic exact."""
    return SpatialGrid([-2.0], [2.0], 5)


@pytest.fixture(scope="session")
def bump():
    return Bump([0.0], 2.0)


@pytest.fixture(scope="session")
def planar_field():
    """diag(-1,-2) with B = I and feedbacks {0, K_rot}; the second closed
    loop A + B K = [[0, 1], [-1, 0]] is the quarter-turn rotation field."""
    return VectorFieldSpec.linear_feedback(
        [[-1.0, 0.0], [0.0, -2.0]],
        np.eye(2),
        [np.zeros((2, 2)), [[1.0, 1.0], [-1.0, 2.0]]],
    )


@pytest.fixture(scope="session")
def planar_grid():
    return SpatialGrid([-1.0, -1.0], [1.0, 1.0], 9)


@pytest.fixture(scope="session")
def zero_field2():
    return VectorFieldSpec.zero(2, control_dim=1)
