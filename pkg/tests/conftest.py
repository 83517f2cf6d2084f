# tests/conftest.py
import numpy as np
import pytest

from consmps import create_app, db
from consmps.config import TestConfig
from consmps.indexing import ConstraintSystem, hypercube


@pytest.fixture
def app():
    app = create_app(TestConfig)
    with app.app_context():
        yield app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- Fixture systems ---

@pytest.fixture
def eq3_system():
    """x1 + x2 + x3 = 2"""
    return ConstraintSystem([[1, 1, 1]], [2], [2])


@pytest.fixture
def eq4_system():
    """2 <= x1 + ... + x6 <= 4"""
    return ConstraintSystem([[1] * 6], [2], [4])


@pytest.fixture
def eq8_system():
    return ConstraintSystem([[1, 2, -1, -2], [-2, 3, -1, 1]], [-1, -1], [2, 1])


def feasible_set(sys):
    X = hypercube(sys.N)
    return {tuple(int(v) for v in x) for x in X[sys.is_feasible(X)]}


def random_system(rng, max_n=8, max_m=3, coeff=3):
    """Random feasible system whose bounds bracket the value of a random bitstring."""
    N = int(rng.integers(1, max_n + 1))
    M = int(rng.integers(1, max_m + 1))
    A = rng.integers(-coeff, coeff + 1, size=(M, N))
    x = rng.integers(0, 2, size=N)
    value = A @ x
    lower = value - rng.integers(0, 3, size=M)
    upper = value + rng.integers(0, 3, size=M)
    return ConstraintSystem(A, lower, upper)
