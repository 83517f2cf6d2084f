# tests/test_indexing.py
import itertools

import numpy as np
import pytest

from consmps import qregion as qr
from consmps.errors import InfeasibleSystem, InstanceError
from consmps.indexing import (
    ConstraintSystem, LinkIndex, backward_sweep, boundary, charge_complexity, chi, constraints_to_indices,
    hypercube, index_refine, link_profile, right_indices,
)
from consmps.problems import gen_cardinality, gen_facility


def regions(*texts):
    return {qr.parse_qregion(t) for t in texts}


def test_system_validation():
    with pytest.raises(InstanceError):
        ConstraintSystem([[1, 1]], [3], [2])
    with pytest.raises(InstanceError):
        ConstraintSystem([[1, 1]], [0, 0], [1, 1])


def test_system_is_feasible_vectorised(eq3_system):
    X = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
    assert list(eq3_system.is_feasible(X)) == [True, False, True]
    assert eq3_system.is_feasible([1, 0, 1]) is True


def test_hypercube_order():
    assert hypercube(2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert hypercube(3, 5, 7).tolist() == [[1, 0, 1], [1, 1, 0]]


def test_boundary_boxes(eq8_system):
    bounds = boundary(eq8_system)
    assert bounds[0] == qr.IntBox((0, 0), (0, 0))
    assert bounds[3] == qr.IntBox((-1, -3), (3, 3))
    assert bounds[4] == qr.IntBox((-3, -3), (3, 4))


def test_eq3_link_charges(eq3_system):
    idx = constraints_to_indices(eq3_system)
    assert [len(l) for l in idx] == [1, 2, 2, 1]
    assert set(idx[1]) == {qr.point((0,)), qr.point((1,))}
    assert set(idx[2]) == {qr.point((1,)), qr.point((2,))}
    assert set(idx[3]) == {qr.point((2,))}


def test_upper_bound_only_cardinality_profile():
    sys = gen_cardinality(6, 0, 4)
    profile = link_profile(sys)
    assert profile.left[1:] == (2, 3, 3, 3, 2, 1)
    assert profile.charge_complexity == 3


def test_eq4_profile_and_last_link(eq4_system):
    idx = constraints_to_indices(eq4_system)
    assert [len(l) for l in idx[1:]] == [2, 3, 4, 5, 3, 1]
    assert set(idx[5]) == regions("[(1),(1)]", "[2,3]", "[(4),(4)]")
    assert set(idx[6]) == regions("[2,4]")


def test_eq8_backward_sweep(eq8_system):
    cand = backward_sweep(eq8_system)
    assert set(cand[4]) == regions("[(-1,-1),(2,1)]")
    assert len(cand[3]) == 3
    assert qr.from_box((1, -1), (2, 0)) in set(cand[3])
    # the three regions tile the part of B_3 that can still reach the flux
    covered = set().union(*(qr.enumerate_points(q) for q in cand[3]))
    box3 = boundary(eq8_system)[3]
    col4 = eq8_system.column(4)
    reach = {p for p in box3.points()
             if p in qr.from_box((-1, -1), (2, 1))
             or tuple(a + b for a, b in zip(p, col4)) in qr.from_box((-1, -1), (2, 1))}
    assert covered == reach


def test_eq8_validated_indices(eq8_system):
    idx = constraints_to_indices(eq8_system)
    assert max(len(l) for l in idx) == 3
    assert set(idx[4]) == regions("[(-1,-1),(2,1)]")


def test_eq8_flux_on_first_site(eq8_system):
    right = right_indices(eq8_system)
    assert set(right[4]) == {qr.point((0, 0))}
    assert set(right[1]) == regions("[(-2,2),(1,3)]u[(-2,1),(-2,1)]", "[(-1,-1),(2,0)]u[(2,1),(2,1)]")
    assert set(right[2]) == regions("[(0,-1),(0,0)]", "[(-1,-1),(-1,0)]", "[(-2,1),(-2,1)]",
                                    "[(-3,-1),(-2,0)]")
    assert set(right[3]) == regions("[(0,0),(0,0)]", "[(-2,1),(-2,1)]")


def test_links_are_disjoint_and_ordered(eq8_system):
    for family in (constraints_to_indices(eq8_system), right_indices(eq8_system)):
        for link in family:
            for a, b in itertools.combinations(link, 2):
                assert (a & b).is_empty
            assert list(link) == sorted(link, key=qr.region_key)


def test_every_feasible_path_is_labelled(eq8_system):
    idx = constraints_to_indices(eq8_system)
    X = hypercube(eq8_system.N)
    for x in X[eq8_system.is_feasible(X)]:
        partial = np.cumsum(eq8_system.A * x, axis=1)
        for i in range(1, eq8_system.N + 1):
            assert idx[i].locate(tuple(partial[:, i - 1])) is not None


def test_chi_keeps_containing_regions():
    sup = LinkIndex.ordered([qr.point((0,)), qr.point((1,))])
    assert list(chi([qr.point((0,))], sup, (0,))) == [qr.point((0,))]
    assert list(chi([qr.point((0,))], sup, (1,))) == [qr.point((1,))]
    assert len(chi([], sup, (0,))) == 0
    # a shifted region straddling two members is not contained in either
    assert len(chi([qr.from_box((0,), (1,))], sup, (0,))) == 0


def test_index_refine_splits_overlaps():
    a = [qr.from_box((0,), (3,))]
    b = [qr.from_box((2,), (5,))]
    refined = index_refine(a, b)
    assert set(refined) == regions("[0,1]", "[2,3]", "[4,5]")


def test_link_index_locate():
    link = LinkIndex.ordered([qr.from_box((2,), (3,)), qr.point((0,)), qr.point((0,))])
    assert len(link) == 2
    assert link.locate((3,)) == 1
    assert link.locate((1,)) is None


@pytest.mark.parametrize('A,lower,upper', [
    ([[1, 1]], [3], [5]),
    ([[2, 2]], [1], [1]),
])
def test_infeasible_systems(A, lower, upper):
    with pytest.raises(InfeasibleSystem, match="infeasible"):
        constraints_to_indices(ConstraintSystem(A, lower, upper))


def test_cardinality_complexity_extremes():
    assert charge_complexity(gen_cardinality(12, 6, 6)) == 7
    assert charge_complexity(gen_cardinality(12, 0, 12)) == 1


@pytest.mark.slow
@pytest.mark.parametrize('N', [12, 24, 36, 48, 60])
def test_cardinality_complexity_curve(N):
    assert charge_complexity(gen_cardinality(N, N // 2, N // 2)) == N // 2 + 1
    assert charge_complexity(gen_cardinality(N, 0, N)) == 1
    for delta in range(0, N + 1, max(1, N // 12)):
        lower = (N - delta) // 2
        Q = charge_complexity(gen_cardinality(N, lower, lower + delta))
        expected = N - delta if delta >= N / 3 else (N + delta) / 2
        assert abs(Q - expected) <= 2, (N, delta, Q)


def test_reversed_columns_keep_complexity(rng):
    checked = 0
    for _ in range(300):
        N, M = int(rng.integers(1, 10)), int(rng.integers(1, 4))
        A = rng.integers(-3, 4, size=(M, N))
        lower = rng.integers(-4, 3, size=M)
        upper = lower + rng.integers(0, 4, size=M)
        try:
            forward = charge_complexity(ConstraintSystem(A, lower, upper))
        except InfeasibleSystem:
            continue
        # mirrored chain swaps the roles of the two flux placements
        assert charge_complexity(ConstraintSystem(A[:, ::-1], lower, upper)) == forward
        checked += 1
    assert checked > 30


def mean_facility_complexity(N, M, seeds=range(5)):
    return float(np.mean([charge_complexity(gen_facility(N, M, 2, seed=s).system) for s in seeds]))


def test_facility_rows_are_forced_at_n20():
    # two facilities per row with 2 <= A x <= 2 pins every row to a single region
    assert [mean_facility_complexity(20, M) for M in (2, 3, 4)] == [1.0, 1.0, 1.0]


@pytest.mark.slow
@pytest.mark.parametrize('N', [30, 40])
def test_facility_complexity_grows_with_rows(N):
    means = [mean_facility_complexity(N, M) for M in (2, 3, 4)]
    assert means == sorted(means)
    for smaller, larger in zip(means, means[1:]):
        assert larger / smaller > 1.5, means
