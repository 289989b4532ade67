import numpy as np
import pytest

from toeplitz_pnt.arith import table_for
from toeplitz_pnt.constructions import (
    BuildConfig,
    build_bounded_holes,
    build_squares_counterexample,
    build_theorem_a,
)


@pytest.fixture(scope="session")
def table():
    return table_for(10**7)


@pytest.fixture(scope="session")
def theorem_a():
    return build_theorem_a(BuildConfig(growth_constant=2, stage_budget=3, seed=0))


@pytest.fixture(scope="session")
def squares():
    return build_squares_counterexample(BuildConfig(stage_budget=3))


@pytest.fixture(scope="session")
def bounded():
    return build_bounded_holes(2, (31, 961, 29791, 923521), 1, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
