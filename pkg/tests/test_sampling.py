# tests/test_sampling.py
from collections import Counter

import numpy as np
import pytest

from conftest import random_system
from consmps.cmps import constraints_to_mps, dense_amplitudes, evaluate_many, random_mps
from consmps.indexing import hypercube
from consmps.problems import brute_force_count
from consmps.sampling import sample


def empirical_tv(mps, draws):
    X = hypercube(mps.N)
    psi = dense_amplitudes(mps)
    exact = psi**2 / np.sum(psi**2)
    counts = Counter(tuple(int(v) for v in x) for x in draws)
    observed = np.array([counts.get(tuple(int(v) for v in x), 0) for x in X]) / len(draws)
    return 0.5 * float(np.abs(exact - observed).sum())


def test_uniform_eq3_frequencies(eq3_system, rng):
    draws = sample(constraints_to_mps(eq3_system), 6000, rng)
    counts = Counter(tuple(int(v) for v in x) for x in draws)
    assert set(counts) == {(1, 1, 0), (1, 0, 1), (0, 1, 1)}
    for c in counts.values():
        assert c / 6000 == pytest.approx(1 / 3, abs=0.03)


def test_samples_are_feasible(eq8_system, rng):
    draws = sample(random_mps(eq8_system, rng, max_dim=2), 500, rng)
    assert draws.shape == (500, 4)
    assert draws.dtype == np.int8
    assert eq8_system.is_feasible(draws).all()


def test_sampling_leaves_state_untouched(eq8_system, rng):
    mps = random_mps(eq8_system, rng, max_dim=2)
    before = evaluate_many(mps, hypercube(4))
    centre = mps.center
    sample(mps, 10, rng)
    assert mps.center == centre
    assert np.array_equal(evaluate_many(mps, hypercube(4)), before)


def test_zero_count(eq3_system, rng):
    assert sample(constraints_to_mps(eq3_system), 0, rng).shape == (0, 3)


def test_same_seed_same_samples(eq8_system):
    mps = constraints_to_mps(eq8_system)
    a = sample(mps, 50, np.random.default_rng(7))
    b = sample(mps, 50, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_random_state_distribution(eq8_system, rng):
    mps = random_mps(eq8_system, rng, max_dim=3)
    assert empirical_tv(mps, sample(mps, 20000, rng)) <= 0.02


@pytest.mark.slow
def test_perfect_sampling_on_random_states(rng):
    done = 0
    while done < 20:
        sys = random_system(rng, max_n=8, max_m=2)
        if sys.N != 8 or brute_force_count(sys) > 100:
            continue
        mps = random_mps(sys, rng, max_dim=3)
        draws = sample(mps, 30000, rng)
        assert sys.is_feasible(draws).all()
        assert empirical_tv(mps, draws) <= 0.02
        done += 1
