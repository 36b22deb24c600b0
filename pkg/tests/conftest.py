import numpy as np
import pytest

from cauchylab import (
    LinearPSD,
    NormSubdifferential,
    Rotation,
    ScaledIdentity,
    SpaceContext,
    StronglyAccretive,
    TimeGrid,
    solve_second_order,
)


@pytest.fixture(scope="session")
def hilbert2():
    return SpaceContext.hilbert(2)


@pytest.fixture(scope="session")
def hilbert3():
    return SpaceContext.hilbert(3)


@pytest.fixture(scope="session")
def lp4(hilbert2):
    # M calibrated against the seeded sampling used by the bundled config
    return SpaceContext.lp(2, 4.0, 0.02)


@pytest.fixture(scope="session")
def catalog(hilbert2):
    """Catalog operators with initial points for trajectory-level checks."""
    return [
        ("identity", ScaledIdentity(1.0, hilbert2), np.array([1.0, 0.0])),
        ("diag14", LinearPSD(np.diag([1.0, 4.0]), hilbert2), np.array([1.0, 1.0])),
        ("subdiff", NormSubdifferential(hilbert2), np.array([1.0, 0.0])),
        (
            "strongly_accretive",
            StronglyAccretive(Rotation(space=hilbert2), 1.0),
            np.array([1.0, 0.0]),
        ),
        ("rotation", Rotation(space=hilbert2), np.array([1.0, 0.0])),
        ("zero", ScaledIdentity(0.0, hilbert2), np.array([0.7, -0.3])),
    ]


@pytest.fixture(scope="session")
def catalog_trajectories(catalog):
    grid = TimeGrid(40.0, 0.01)
    return [
        (name, op, x, solve_second_order(op, x, grid)) for name, op, x in catalog
    ]
