import numpy as np
import pytest

from catapult_lab.experiments import run_scalar_relu
from catapult_lab.models import generate_sparse_regression

# reference two-parameter configuration used across the suite
U0 = 10.0
V0 = 1e-6
EPSILON = 0.01
ETA = (2.0 + EPSILON) / (U0 * U0)
STEPS = 100_000


@pytest.fixture(scope="session")
def gd_run():
    return run_scalar_relu(U0, V0, ETA, 0.0, STEPS)


@pytest.fixture(scope="session")
def phb_run():
    return run_scalar_relu(U0, V0, ETA, 0.9, STEPS)


@pytest.fixture(scope="session")
def default_dataset():
    return generate_sparse_regression(50, 100, 5.0, 5.0, 5, seed=0)


@pytest.fixture(scope="session")
def small_dataset():
    return generate_sparse_regression(4, 8, 2.0, 1.0, 2, seed=11)


@pytest.fixture(scope="session")
def rng():
    return np.random.Generator(np.random.PCG64(2024))
