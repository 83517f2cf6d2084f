# tests/test_cmps.py
import numpy as np
import pytest

from conftest import feasible_set, random_system
from consmps import qregion as qr
from consmps.cmps import (
    Side, constraints_to_mps, count_solutions, dense_amplitudes, dump_mps, evaluate, evaluate_many,
    load_mps, norm_squared, random_mps,
)
from consmps.errors import InfeasibleSystem, InstanceError
from consmps.indexing import ConstraintSystem, hypercube
from consmps.problems import brute_force_count, gen_cardinality


def support(mps):
    X = hypercube(mps.N)
    amps = evaluate_many(mps, X)
    return {tuple(int(v) for v in x) for x, a in zip(X, amps) if a != 0}


def test_eq3_uniform_state(eq3_system):
    mps = constraints_to_mps(eq3_system)
    assert support(mps) == {(1, 1, 0), (1, 0, 1), (0, 1, 1)}
    assert evaluate(mps, [1, 1, 0]) == 1.0
    assert evaluate(mps, [1, 1, 1]) == 0.0
    assert count_solutions(mps) == 3
    assert norm_squared(mps) == pytest.approx(3.0)


def test_eq8_uniform_state(eq8_system):
    mps = constraints_to_mps(eq8_system)
    assert evaluate(mps, [1, 1, 1, 0]) == 1.0
    assert evaluate(mps, [0, 1, 0, 0]) == 0.0
    assert count_solutions(mps) == 5
    assert support(mps) == feasible_set(eq8_system)


@pytest.mark.parametrize('flux_site', [1, 2, 3, 4])
def test_eq8_every_flux_site(eq8_system, flux_site):
    mps = constraints_to_mps(eq8_system, flux_site)
    assert mps.tensor(flux_site).side is Side.FLUX
    assert count_solutions(mps) == 5
    assert support(mps) == feasible_set(eq8_system)


def test_block_counts_upper_bound_cardinality():
    mps = constraints_to_mps(gen_cardinality(6, 0, 4))
    assert mps.block_counts() == [2, 4, 6, 6, 5, 3]
    assert mps.n_blocks() == 26
    assert mps.link_block_counts() == [2, 6, 10, 12, 11, 8, 3]


def test_block_counts_eq4(eq4_system):
    mps = constraints_to_mps(eq4_system)
    assert mps.block_counts() == [2, 4, 6, 8, 8, 4]
    assert count_solutions(mps) == 50


def test_block_fusion_rules(eq8_system):
    mps = constraints_to_mps(eq8_system, 2)
    for t in mps.tensors:
        step = eq8_system.column(t.site)
        for (a, x, b) in t.blocks:
            offset = step if x else (0, 0)
            if t.side is Side.LEFT:
                assert mps.fusion.left[t.site][a, x] == b
                assert qr.shift(mps.left[t.site - 1][a], offset) <= mps.left[t.site][b]
            elif t.side is Side.RIGHT:
                assert mps.fusion.right[t.site][b, x] == a
                assert qr.shift(mps.right[t.site][b], offset) <= mps.right[t.site - 1][a]


def test_unconstrained_is_product_state():
    sys = gen_cardinality(5, 0, 5)
    mps = constraints_to_mps(sys)
    assert all(len(link) == 1 for link in mps.left)
    assert count_solutions(mps) == 32


def test_single_site_chain():
    mps = constraints_to_mps(ConstraintSystem([[1]], [1], [1]))
    assert support(mps) == {(1,)}
    assert count_solutions(mps) == 1


def test_bad_flux_site(eq3_system):
    with pytest.raises(InstanceError):
        constraints_to_mps(eq3_system, 4)


def test_infeasible_construction():
    with pytest.raises(InfeasibleSystem):
        constraints_to_mps(ConstraintSystem([[1, 1]], [3], [3]))


def test_norm_matches_dense(eq8_system, rng):
    mps = random_mps(eq8_system, rng, max_dim=3)
    psi = dense_amplitudes(mps)
    assert norm_squared(mps) == pytest.approx(float(psi @ psi), rel=1e-12)
    assert count_solutions(mps) == pytest.approx(float(psi.sum()), rel=1e-10, abs=1e-10)


def test_random_states_keep_support(rng):
    for _ in range(20):
        sys = random_system(rng, max_n=7)
        mps = random_mps(sys, rng, max_dim=2, flux_site=int(rng.integers(1, sys.N + 1)))
        assert support(mps) <= feasible_set(sys)


def test_copy_is_independent(eq3_system):
    mps = constraints_to_mps(eq3_system)
    other = mps.copy()
    for blk in other.tensor(1).blocks.values():
        blk *= 5
    assert evaluate(mps, [1, 1, 0]) == 1.0
    assert evaluate(other, [1, 1, 0]) == 5.0


def test_dump_and_load_are_exact(tmp_path, eq8_system, rng):
    mps = random_mps(eq8_system, rng, max_dim=2, flux_site=3)
    path = tmp_path / "state.json"
    dump_mps(mps, path)
    again = load_mps(path)
    X = hypercube(eq8_system.N)
    assert np.array_equal(evaluate_many(mps, X), evaluate_many(again, X))
    assert again.center == mps.center
    assert [len(l) for l in again.left] == [len(l) for l in mps.left]


def test_load_rejects_foreign_files(tmp_path):
    path = tmp_path / "bogus.json"
    path.write_text('{"format": "something-else"}')
    with pytest.raises(InstanceError):
        load_mps(path)


@pytest.mark.slow
def test_count_matches_oracle_on_random_systems(rng):
    for _ in range(200):
        sys = random_system(rng, max_n=12, max_m=3)
        mps = constraints_to_mps(sys, int(rng.integers(1, sys.N + 1)))
        assert count_solutions(mps) == brute_force_count(sys)
        assert support(mps) == feasible_set(sys)
