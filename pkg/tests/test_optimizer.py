# tests/test_optimizer.py
import math

import numpy as np
import pytest

from consmps.canonical import center_on_site
from consmps.cmps import constraints_to_mps, random_mps
from consmps.errors import CenterOutOfRange, ConfigError
from consmps.optimizer import (
    OptimizerConfig, SampleDictionary, anneal_temperature, boltzmann_weights, nll, nll_gradient,
    select, solve, train_step,
)
from consmps.problems import FAMILIES, LinearCost, brute_force_solve, make_cost
from consmps.sampling import sample


class CountingCost:
    def __init__(self):
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return int(np.sum(x))


# --- Temperature and selection ---

def test_boltzmann_weights():
    w = boltzmann_weights([0.0, 1.0], 1.0)
    assert w[0] == pytest.approx(1 / (1 + math.exp(-1)))
    assert w.sum() == pytest.approx(1.0)
    # shifting every cost leaves the weights unchanged
    assert np.allclose(boltzmann_weights([1000.0, 1001.0], 1.0), w)


def test_boltzmann_rejects_bad_input():
    with pytest.raises(ValueError):
        boltzmann_weights([1.0], 0.0)
    with pytest.raises(ValueError):
        boltzmann_weights([], 1.0)


def test_anneal_schedule():
    assert anneal_temperature(6.0, 1) == 6.0
    assert anneal_temperature(6.0, 3) == 2.0
    with pytest.raises(ValueError):
        anneal_temperature(6.0, 0)


def test_select_replaces_exact_count(rng):
    current = np.zeros((400, 5), dtype=np.int8)
    fresh = np.ones((40, 5), dtype=np.int8)
    out = select(current, fresh, 40, rng)
    assert int(np.any(out != current, axis=1).sum()) == 40
    assert not current.any()
    assert np.array_equal(select(current, fresh, 0, rng), current)
    with pytest.raises(ValueError):
        select(current[:10], fresh, 20, rng)


# --- Sample dictionary ---

def test_dictionary_evaluates_each_bitstring_once():
    cost = CountingCost()
    d = SampleDictionary(cost)
    d.add_batch([[1, 0, 1], [1, 0, 1], [0, 0, 1]])
    d.add_batch([[0, 0, 1], [1, 1, 1]])
    assert cost.calls == 3
    assert len(d) == 3
    assert [0, 0, 1] in d
    assert [0, 1, 0] not in d
    assert d.costs_of([[1, 1, 1], [0, 0, 1]]).tolist() == [3.0, 1.0]
    assert d.keys.tolist() == [[1, 0, 1], [0, 0, 1], [1, 1, 1]]


def test_dictionary_best_breaks_ties_lexicographically():
    d = SampleDictionary(LinearCost([1, 1, 0]))
    d.add_batch([[1, 0, 1], [0, 1, 1], [1, 1, 0]])
    x, c = d.best()
    assert x.tolist() == [0, 1, 1]
    assert c == 1.0
    with pytest.raises(ValueError):
        SampleDictionary(LinearCost([0])).best()


# --- Training ---

def test_nll_of_uniform_state(eq4_system):
    mps = constraints_to_mps(eq4_system)
    X = sample(mps, 20, np.random.default_rng(0))
    assert nll(mps, X) == pytest.approx(math.log(50))
    assert nll(mps, [[1, 1, 1, 1, 1, 1]]) == math.inf


def test_gradient_matches_finite_differences(rng):
    inst = FAMILIES['cardinality'](6, lower=2, upper=4)
    mps = random_mps(inst.system, rng, max_dim=2)
    X = sample(mps, 30, rng)
    center_on_site(mps, 3)
    grads = nll_gradient(mps, X)
    h = 1e-6
    for key, blk in mps.tensor(3).blocks.items():
        for idx in np.ndindex(blk.shape):
            orig = blk[idx]
            blk[idx] = orig + h
            up = nll(mps, X)
            blk[idx] = orig - h
            down = nll(mps, X)
            blk[idx] = orig
            assert grads[key][idx] == pytest.approx((up - down) / (2 * h), rel=1e-4, abs=1e-6)


def test_gradient_needs_site_centre(eq3_system):
    mps = constraints_to_mps(eq3_system)
    with pytest.raises(CenterOutOfRange):
        nll_gradient(mps, [[1, 1, 0]])


def test_train_step_lowers_nll(eq4_system):
    mps = constraints_to_mps(eq4_system)
    trainset = np.array([[1, 1, 0, 0, 0, 0]] * 30 + [[0, 0, 1, 1, 1, 0]] * 10, dtype=np.int8)
    before = nll(mps, trainset)
    train_step(mps, trainset, cutoff=0.0, learning_rate=0.01)
    after = nll(mps, trainset)
    assert after < before
    assert mps.center.position == 0 and not mps.center.is_site


def test_training_keeps_samples_feasible(eq8_system, rng):
    mps = constraints_to_mps(eq8_system)
    trainset = sample(mps, 40, rng)
    for _ in range(3):
        train_step(mps, trainset, cutoff=1e-4, learning_rate=0.1, max_dim=2)
    assert mps.max_bond_dimension() <= 2
    assert eq8_system.is_feasible(sample(mps, 300, rng)).all()


# --- Driver ---

def test_config_validation():
    with pytest.raises(ConfigError, match="replace_count"):
        OptimizerConfig(n_samples=10, replace_count=20)
    with pytest.raises(ConfigError, match="t_max.*learning_rate"):
        OptimizerConfig(t_max=0, learning_rate=0.0)


def test_history_invariants():
    inst = FAMILIES['qkp'](10, seed=4)
    cfg = OptimizerConfig(t_max=6, n_samples=60, replace_count=10, seed=1)
    result = solve(make_cost('qkp', inst), inst.system, cfg)
    assert result.iterations == 6
    assert [r.t for r in result.history] == [1, 2, 3, 4, 5, 6]
    T_init = result.t_init
    cum = [r.c_cum_min for r in result.history]
    assert cum == sorted(cum, reverse=True)
    for r in result.history:
        assert r.temperature == pytest.approx(T_init / r.t)
        assert r.c_cum_min <= r.c_min
    sizes = [r.dict_size for r in result.history]
    assert sizes == sorted(sizes)
    assert result.best_cost == cum[-1]
    assert inst.system.is_feasible(result.best_x)


def test_single_iteration_run(eq3_system):
    result = solve(LinearCost([0, 0, 0]), eq3_system, OptimizerConfig(t_max=1, n_samples=20, replace_count=5, seed=3))
    assert len(result.history) == 1
    assert result.stop_reason == 'max_iterations'
    assert result.best_cost == 0
    # T_init falls back to 1 when every initial cost is equal
    assert result.t_init == 1.0


def test_same_seed_same_run():
    inst = FAMILIES['qkp'](8, seed=2)
    cfg = OptimizerConfig(t_max=3, n_samples=50, replace_count=10, seed=17)
    a = solve(make_cost('qkp', inst), inst.system, cfg)
    b = solve(make_cost('qkp', inst), inst.system, cfg)
    assert np.array_equal(a.best_x, b.best_x)
    assert [(r.c_min, r.max_bond, r.dict_size) for r in a.history] == \
        [(r.c_min, r.max_bond, r.dict_size) for r in b.history]


def test_time_limit_stops_early():
    inst = FAMILIES['qkp'](8, seed=2)
    cfg = OptimizerConfig(t_max=50, n_samples=30, replace_count=5, seed=0, time_limit=1e-9)
    result = solve(make_cost('qkp', inst), inst.system, cfg)
    assert result.iterations == 1
    assert result.stop_reason == 'time_limit'


def test_callback_sees_every_record():
    inst = FAMILIES['cardinality'](6, lower=3)
    seen = []
    solve(LinearCost([1, -1, 1, -1, 1, -1]), inst.system,
          OptimizerConfig(t_max=4, n_samples=30, replace_count=5, seed=0), on_iteration=seen.append)
    assert [r.t for r in seen] == [1, 2, 3, 4]


def test_small_qkp_reaches_optimum():
    inst = FAMILIES['qkp'](8, seed=5)
    cost = make_cost('qkp', inst)
    _, best = brute_force_solve(inst.system, cost)
    result = solve(cost, inst.system, OptimizerConfig(t_max=5, n_samples=400, replace_count=40, seed=5))
    assert result.best_cost == best


class FeasibilityCheckingCost:
    """Cost wrapper that fails on any infeasible bitstring handed to it."""

    def __init__(self, cost, sys):
        self.cost = cost
        self.sys = sys
        self.seen = 0

    def __call__(self, x):
        assert self.sys.is_feasible(x), x
        self.seen += 1
        return self.cost(x)


@pytest.mark.slow
def test_qkp_end_to_end():
    optimal, close = 0, 0
    for seed in range(10):
        inst = FAMILIES['qkp'](12, seed=seed)
        cost = make_cost('qkp', inst)
        _, best = brute_force_solve(inst.system, cost)
        checked = FeasibilityCheckingCost(cost, inst.system)
        result = solve(checked, inst.system, OptimizerConfig(t_max=75, n_samples=100, t_init=2.5 * 12, seed=seed))
        assert checked.seen == result.history[-1].dict_size
        cum = [r.c_cum_min for r in result.history]
        assert cum == sorted(cum, reverse=True)
        assert result.best_cost >= best
        optimal += result.best_cost == best
        close += result.best_cost - best <= 0.05 * max(abs(best), 1)
    assert optimal >= 8
    assert close == 10
