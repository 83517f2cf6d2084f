# consmps/indexing.py
"""Link indices of a constrained MPS computed from a linear constraint system.

``constraints_to_indices`` runs the two sweeps that place the flux on the last
site: a backward decomposition that splits the admissible box into QRegions
link by link, then a forward validation that keeps only the QRegions reachable
from the left boundary. The flux-on-first-site family is the same computation
on the column-reversed system.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import qregion as qr
from .errors import InfeasibleSystem, InstanceError
from .qregion import IntBox, QRegion

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """``lower <= A x <= upper`` over binary ``x``; equalities use ``lower == upper``."""
    A: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.int64))
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.int64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.int64))
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise InstanceError(f"A must be a non-empty M x N matrix, got shape {A.shape}")
        if lower.shape != (A.shape[0],) or upper.shape != (A.shape[0],):
            raise InstanceError(
                f"bounds must have length M={A.shape[0]}, got {lower.shape} and {upper.shape}")
        bad = np.flatnonzero(lower > upper)
        if bad.size:
            k = int(bad[0])
            raise InstanceError(f"row {k}: lower bound {lower[k]} exceeds upper bound {upper[k]}")
        for arr in (A, lower, upper):
            arr.setflags(write=False)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @property
    def M(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    def column(self, site: int) -> tuple[int, ...]:
        """Column ``A_site`` for a 1-based site."""
        return tuple(int(v) for v in self.A[:, site - 1])

    @property
    def flux(self) -> QRegion:
        return qr.from_box(tuple(self.lower), tuple(self.upper))

    def reversed(self) -> ConstraintSystem:
        return ConstraintSystem(self.A[:, ::-1], self.lower, self.upper)

    def values(self, x) -> np.ndarray:
        """``A x`` for one bitstring or for each row of a bitstring matrix."""
        x = np.asarray(x, dtype=np.int64)
        return x @ self.A.T

    def is_feasible(self, x):
        vals = self.values(x)
        ok = np.all((vals >= self.lower) & (vals <= self.upper), axis=-1)
        return bool(ok) if np.ndim(ok) == 0 else ok

    def __repr__(self):
        return f"ConstraintSystem(M={self.M}, N={self.N})"


@dataclass(frozen=True)
class LinkIndex:
    """Ordered, pairwise disjoint QRegions labelling the blocks of one MPS bond."""
    qregions: tuple[QRegion, ...]
    dims: tuple[int, ...] | None = None

    def __post_init__(self):
        regions = tuple(self.qregions)
        object.__setattr__(self, 'qregions', regions)
        dims = (1,) * len(regions) if self.dims is None else tuple(int(d) for d in self.dims)
        if len(dims) != len(regions) or any(d < 1 for d in dims):
            raise ValueError("every QRegion needs a positive block dimension")
        object.__setattr__(self, 'dims', dims)

    @classmethod
    def ordered(cls, regions: Iterable[QRegion]) -> LinkIndex:
        """Drop empty and duplicate regions, then sort deterministically."""
        unique = {r for r in regions if not r.is_empty}
        return cls(tuple(sorted(unique, key=qr.region_key)))

    def __len__(self):
        return len(self.qregions)

    def __iter__(self):
        return iter(self.qregions)

    def __getitem__(self, item) -> QRegion:
        return self.qregions[item]

    def locate(self, point) -> int | None:
        """Position of the QRegion containing ``point``."""
        for k, region in enumerate(self.qregions):
            if point in region:
                return k
        return None

    def __str__(self):
        return "{" + ", ".join(str(q) for q in self.qregions) + "}"


def origin_index(ndim: int) -> LinkIndex:
    return LinkIndex((qr.point((0,) * ndim),))


def boundary(sys: ConstraintSystem) -> list[IntBox]:
    """Cumulative bounds ``B_0..B_N``; ``B_0`` is the origin and ``B_N`` encloses every ``A x``."""
    lows = np.concatenate([np.zeros((sys.M, 1), dtype=np.int64),
                           np.cumsum(np.minimum(sys.A, 0), axis=1)], axis=1)
    highs = np.concatenate([np.zeros((sys.M, 1), dtype=np.int64),
                            np.cumsum(np.maximum(sys.A, 0), axis=1)], axis=1)
    return [IntBox(tuple(lows[:, i]), tuple(highs[:, i])) for i in range(sys.N + 1)]


def index_refine(a: Sequence[QRegion], b: Sequence[QRegion]) -> LinkIndex:
    """Common refinement of two region families.

    Pieces are intersections and differences of the inputs; the loop keeps
    splitting until all pieces are pairwise disjoint, so overlapping members
    inside one family are handled too.
    """
    pieces: list[QRegion] = []
    for region in list(a) + list(b):
        if region.is_empty:
            continue
        rest = region
        refined = []
        for piece in pieces:
            if not piece.might_overlap(region):
                refined.append(piece)
                continue
            common = piece & region
            if common.is_empty:
                refined.append(piece)
                continue
            refined.append(common)
            outside = piece - region
            if not outside.is_empty:
                refined.append(outside)
            rest = rest - piece
        if not rest.is_empty:
            refined.append(rest)
        pieces = refined
    return LinkIndex.ordered(pieces)


def chi(sub: Iterable[QRegion], sup: LinkIndex, offset) -> LinkIndex:
    """Regions of ``sup`` that contain ``shift(q, offset)`` for some ``q`` in ``sub``."""
    kept = set()
    for region in sub:
        if region.is_empty:
            continue
        moved = qr.shift(region, offset)
        k = sup.locate(moved.first_point())
        if k is not None and qr.is_subset(moved, sup[k]):
            kept.add(k)
    return LinkIndex(tuple(sup[k] for k in sorted(kept)))


def backward_sweep(sys: ConstraintSystem) -> list[LinkIndex]:
    """Candidate indices ``l_0..l_N`` before forward validation (``l_0`` is the origin)."""
    bounds = boundary(sys)
    last = sys.flux & qr.from_box(bounds[-1].lo, bounds[-1].hi)
    if last.is_empty:
        raise InfeasibleSystem(f"infeasible: Box(l,u) does not meet the reachable range {bounds[-1]}")
    indices: list[LinkIndex | None] = [None] * (sys.N + 1)
    indices[sys.N] = LinkIndex((last,))
    for i in range(sys.N - 1, 0, -1):
        box = qr.from_box(bounds[i].lo, bounds[i].hi)
        neg = tuple(-v for v in sys.column(i + 1))
        stay = [q & box for q in indices[i + 1]]
        step = [qr.shift(q, neg) & box for q in indices[i + 1]]
        indices[i] = index_refine(stay, step)
        log.debug(f"[Backward] link {i}: {len(indices[i])} candidate QRegions")
        if not len(indices[i]):
            raise InfeasibleSystem(f"infeasible: no QRegion survives at link {i}")
    indices[0] = origin_index(sys.M)
    return indices


def forward_validate(sys: ConstraintSystem, candidates: Sequence[LinkIndex]) -> list[LinkIndex]:
    """Keep the candidate QRegions reachable from the origin."""
    zero = (0,) * sys.M
    validated = [candidates[0]]
    for i in range(1, sys.N + 1):
        prev = validated[-1]
        keep_zero = chi(prev, candidates[i], zero)
        keep_step = chi(prev, candidates[i], sys.column(i))
        merged = LinkIndex.ordered(list(keep_zero) + list(keep_step))
        if not len(merged):
            raise InfeasibleSystem(f"infeasible: link {i} is unreachable from the left boundary")
        validated.append(merged)
    return validated


def constraints_to_indices(sys: ConstraintSystem) -> list[LinkIndex]:
    """Link indices ``l_0..l_N`` with the flux on the last site.

    ``result[0]`` is the origin boundary, ``result[N]`` is ``Box(l,u)`` clipped
    to the reachable range.
    """
    return forward_validate(sys, backward_sweep(sys))


def right_indices(sys: ConstraintSystem) -> list[LinkIndex]:
    """Link indices ``l~_0..l~_N`` with the flux on the first site (``l~_N`` is the origin)."""
    rev = constraints_to_indices(sys.reversed())
    return [rev[sys.N - i] for i in range(sys.N + 1)]


@dataclass(frozen=True)
class LinkProfile:
    left: tuple[int, ...]
    right: tuple[int, ...]

    @property
    def charge_complexity(self) -> int:
        return max(max(self.left), max(self.right))


def link_profile(sys: ConstraintSystem, left=None, right=None) -> LinkProfile:
    """QRegion counts per link for both flux placements."""
    left = constraints_to_indices(sys) if left is None else left
    right = right_indices(sys) if right is None else right
    return LinkProfile(tuple(len(l) for l in left), tuple(len(r) for r in right))


def charge_complexity(sys: ConstraintSystem) -> int:
    """Maximum QRegion count over all links of both index families."""
    return link_profile(sys).charge_complexity


def hypercube(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop-1`` of the ``2**n`` bitstrings, ``x_1`` as the most significant bit."""
    stop = 2**n if stop is None else stop
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.int8)
