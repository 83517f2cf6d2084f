# consmps/canonical.py
"""Canonical form of a constrained MPS and the joint-block SVD behind it.

Moving the centre one site merges the centre with its neighbour and factorizes
the result again. Rows of the merged matrix are grouped by the QRegion of the
new link they fuse into, each group gets its own SVD, and a single global
threshold decides which singular values survive across all groups.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np
import scipy.linalg

from .cmps import BlockTensor, Center, ConstrainedMPS, Side
from .errors import CenterOutOfRange, FactorizationError

log = logging.getLogger(__name__)

# Singular values at or below this fraction of the largest one count as zero.
ZERO_TOLERANCE = 1e-14


@dataclass
class Factorization:
    u: dict[Hashable, np.ndarray]
    f: dict[Hashable, np.ndarray]
    singular_values: dict[Hashable, np.ndarray]
    discarded_weight: float

    @property
    def kept(self) -> int:
        return sum(len(s) for s in self.singular_values.values())


def _svd(matrix: np.ndarray):
    try:
        return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver='gesdd')
    except np.linalg.LinAlgError:
        log.warning("[SVD] gesdd did not converge, retrying with gesvd")
        return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver='gesvd')


def select_singular_values(spectra: list[np.ndarray], cutoff: float = 0.0,
                           max_dim: int | None = None) -> list[int]:
    """How many leading singular values of each group survive the global truncation.

    Values are ranked by size, then group order, then position. At most
    ``max_dim`` are kept; after that the smallest are dropped while the
    total discarded weight, including what ``max_dim`` already removed, stays
    within ``cutoff`` times the total weight. At least one value is always kept.
    """
    ranked = sorted(((-float(s), g, k) for g, sv in enumerate(spectra) for k, s in enumerate(sv)))
    if not ranked:
        return [0] * len(spectra)
    largest = -ranked[0][0]
    total = sum(s * s for sv in spectra for s in sv.tolist())
    ranked = [r for r in ranked if -r[0] > ZERO_TOLERANCE * largest] or ranked[:1]
    if max_dim is not None:
        ranked = ranked[:max(1, int(max_dim))]
    budget = cutoff * total
    dropped = total - sum(r[0] ** 2 for r in ranked)
    while len(ranked) > 1 and dropped + ranked[-1][0] ** 2 <= budget:
        dropped += ranked[-1][0] ** 2
        ranked.pop()
    keep = [0] * len(spectra)
    for _, g, _ in ranked:
        keep[g] += 1
    return keep


def joint_block_svd(groups: Mapping[Hashable, np.ndarray], cutoff: float = 0.0,
                    max_dim: int | None = None) -> Factorization:
    """Factorize row groups ``W_g = U_g F_g`` with one truncation threshold for all groups.

    Every kept ``U_g`` has orthonormal columns and ``F_g = diag(s) V_g^T``;
    groups whose singular values are all dropped are left out. The
    discarded weight is the squared Frobenius reconstruction error.
    """
    keys = sorted(groups)
    if not keys:
        raise FactorizationError("joint-block SVD needs at least one group")
    decomposed = [_svd(np.asarray(groups[k], dtype=float)) for k in keys]
    spectra = [s for _, s, _ in decomposed]
    total = float(sum(np.sum(s * s) for s in spectra))
    if total == 0.0:
        raise FactorizationError("joint-block SVD received only zero blocks")
    keep = select_singular_values(spectra, cutoff, max_dim)
    fact = Factorization({}, {}, {}, 0.0)
    kept_weight = 0.0
    for key, (U, s, Vh), k in zip(keys, decomposed, keep):
        if k == 0:
            continue
        fact.u[key] = U[:, :k]
        fact.f[key] = s[:k, None] * Vh[:k]
        fact.singular_values[key] = s[:k]
        kept_weight += float(np.sum(s[:k] ** 2))
    fact.discarded_weight = max(total - kept_weight, 0.0)
    return fact


# --- Grouped matricization ---
# entries are (group, row key, column key, block); rows and columns of one
# group are laid out in sorted key order.

def _assemble(entries):
    layout = defaultdict(lambda: ({}, {}))
    for group, row, col, blk in entries:
        rows, cols = layout[group]
        rows[row] = blk.shape[0]
        cols[col] = blk.shape[1]
    slices = {}
    matrices = {}
    for group, (rows, cols) in layout.items():
        row_sl, col_sl = {}, {}
        offset = 0
        for r in sorted(rows):
            row_sl[r] = slice(offset, offset + rows[r])
            offset += rows[r]
        n_rows = offset
        offset = 0
        for c in sorted(cols):
            col_sl[c] = slice(offset, offset + cols[c])
            offset += cols[c]
        matrices[group] = np.zeros((n_rows, offset))
        slices[group] = (row_sl, col_sl)
    for group, row, col, blk in entries:
        row_sl, col_sl = slices[group]
        matrices[group][row_sl[row], col_sl[col]] += blk
    return matrices, slices


def _factor(mps: ConstrainedMPS, entries, cutoff: float, max_dim: int | None):
    matrices, slices = _assemble(entries)
    fact = joint_block_svd(matrices, cutoff, max_dim)
    mps.discarded_weight += fact.discarded_weight
    if fact.discarded_weight:
        log.debug(f"[Canonical] kept {fact.kept} singular values, discarded weight {fact.discarded_weight:.3e}")
    return fact, slices


def _center_site(mps: ConstrainedMPS) -> int:
    if not mps.center.is_site:
        raise CenterOutOfRange(f"centre is on bond {mps.center.position}, not on a site")
    return mps.center.position


def _center_bond(mps: ConstrainedMPS) -> int:
    if mps.center.is_site:
        raise CenterOutOfRange(f"centre is on site {mps.center.position}, not on a bond")
    return mps.center.position


def absorb_right(mps: ConstrainedMPS) -> ConstrainedMPS:
    """Contract the bond matrix at ``i-1`` into site ``i``; the site becomes the centre."""
    bond = _center_bond(mps)
    if bond >= mps.N:
        raise CenterOutOfRange("centre is already at the right boundary")
    i = bond + 1
    by_label = defaultdict(list)
    for (a, bp), F in mps.flux_matrix.items():
        by_label[bp].append((a, F))
    table, compat = mps.fusion.left[i], mps.fusion.compat[i]
    merged = {}
    for (bp, x, b), blk in mps.tensor(i).blocks.items():
        for a, F in by_label.get(bp, ()):
            c = int(table[a, x])
            if c < 0 or (c, b) not in compat:
                continue
            key = (a, x, b)
            merged[key] = merged[key] + F @ blk if key in merged else F @ blk
    mps.tensors[i - 1] = BlockTensor(i, Side.FLUX, merged)
    mps.flux_matrix = None
    mps.center = Center('site', i)
    return mps


def absorb_left(mps: ConstrainedMPS) -> ConstrainedMPS:
    """Contract site ``i`` into the bond matrix at ``i``; the site becomes the centre."""
    i = _center_bond(mps)
    if i <= 0:
        raise CenterOutOfRange("centre is already at the left boundary")
    by_label = defaultdict(list)
    for (c, b), F in mps.flux_matrix.items():
        by_label[c].append((b, F))
    merged = {}
    for (a, x, c), blk in mps.tensor(i).blocks.items():
        for b, F in by_label.get(c, ()):
            key = (a, x, b)
            merged[key] = merged[key] + blk @ F if key in merged else blk @ F
    mps.tensors[i - 1] = BlockTensor(i, Side.FLUX, merged)
    mps.flux_matrix = None
    mps.center = Center('site', i)
    return mps


def split_right(mps: ConstrainedMPS, cutoff: float = 0.0, max_dim: int | None = None) -> ConstrainedMPS:
    """Factor the centre site ``i`` into a left isometry and the bond matrix at ``i``.

    Rows ``(a, x)`` are grouped by the label of ``l_i`` they fuse into.
    """
    i = _center_site(mps)
    table = mps.fusion.left[i]
    entries = [(int(table[a, x]), (a, x), b, blk) for (a, x, b), blk in mps.tensor(i).blocks.items()
               if table[a, x] >= 0]
    fact, slices = _factor(mps, entries, cutoff, max_dim)
    blocks, flux = {}, {}
    for c, U in fact.u.items():
        row_sl, col_sl = slices[c]
        for (a, x), sl in row_sl.items():
            blocks[(a, x, c)] = U[sl]
        for b, sl in col_sl.items():
            flux[(c, b)] = fact.f[c][:, sl]
    mps.tensors[i - 1] = BlockTensor(i, Side.LEFT, blocks)
    mps.flux_matrix = flux
    mps.center = Center('bond', i)
    return mps


def split_left(mps: ConstrainedMPS, cutoff: float = 0.0, max_dim: int | None = None) -> ConstrainedMPS:
    """Factor the centre site ``i`` into the bond matrix at ``i-1`` and a right isometry.

    Rows ``(x, b)`` of the transposed site are grouped by the label of
    ``l~_{i-1}`` they fuse into.
    """
    i = _center_site(mps)
    table = mps.fusion.right[i]
    entries = [(int(table[b, x]), (x, b), a, blk.T) for (a, x, b), blk in mps.tensor(i).blocks.items()
               if table[b, x] >= 0]
    fact, slices = _factor(mps, entries, cutoff, max_dim)
    blocks, flux = {}, {}
    for bp, U in fact.u.items():
        row_sl, col_sl = slices[bp]
        for (x, b), sl in row_sl.items():
            blocks[(bp, x, b)] = U[sl].T.copy()
        for a, sl in col_sl.items():
            flux[(a, bp)] = fact.f[bp][:, sl].T.copy()
    mps.tensors[i - 1] = BlockTensor(i, Side.RIGHT, blocks)
    mps.flux_matrix = flux
    mps.center = Center('bond', i - 1)
    return mps


def shift_center_right(mps: ConstrainedMPS, cutoff: float = 0.0, max_dim: int | None = None) -> ConstrainedMPS:
    """Move the centre from bond ``i-1`` to bond ``i`` (a site centre splits to its right bond)."""
    if not mps.center.is_site:
        absorb_right(mps)
    return split_right(mps, cutoff, max_dim)


def shift_center_left(mps: ConstrainedMPS, cutoff: float = 0.0, max_dim: int | None = None) -> ConstrainedMPS:
    """Move the centre from bond ``i`` to bond ``i-1`` (a site centre splits to its left bond)."""
    if not mps.center.is_site:
        absorb_left(mps)
    return split_left(mps, cutoff, max_dim)


# --- Exact orthonormalization of a non-canonical chain ---

def _push_right(mps: ConstrainedMPS, site: int, factors: dict[int, np.ndarray]):
    """Multiply ``factors[c]`` into every block whose left leg is label ``c`` of link ``site``."""
    if site > mps.N or (not mps.center.is_site and mps.center.position == site):
        mps.flux_matrix = {(c, b): factors[c] @ F for (c, b), F in mps.flux_matrix.items() if c in factors}
        return
    t = mps.tensor(site + 1)
    t.blocks = {(c, x, b): factors[c] @ blk for (c, x, b), blk in t.blocks.items() if c in factors}


def _push_left(mps: ConstrainedMPS, site: int, factors: dict[int, np.ndarray]):
    """Multiply ``factors[b]^T`` into every block whose right leg is label ``b`` of link ``site - 1``."""
    if not mps.center.is_site and mps.center.position == site - 1:
        mps.flux_matrix = {(c, b): F @ factors[b].T for (c, b), F in mps.flux_matrix.items() if b in factors}
        return
    t = mps.tensor(site - 1)
    t.blocks = {(a, x, b): blk @ factors[b].T for (a, x, b), blk in t.blocks.items() if b in factors}


def _left_orthonormalize(mps: ConstrainedMPS, site: int):
    entries = [(c, (a, x), c, blk) for (a, x, c), blk in mps.tensor(site).blocks.items()]
    fact, slices = _factor(mps, entries, 0.0, None)
    blocks = {}
    for c, U in fact.u.items():
        for (a, x), sl in slices[c][0].items():
            blocks[(a, x, c)] = U[sl]
    mps.tensor(site).blocks = blocks
    _push_right(mps, site, fact.f)


def _right_orthonormalize(mps: ConstrainedMPS, site: int):
    entries = [(bp, (x, b), bp, blk.T) for (bp, x, b), blk in mps.tensor(site).blocks.items()]
    fact, slices = _factor(mps, entries, 0.0, None)
    blocks = {}
    for bp, U in fact.u.items():
        for (x, b), sl in slices[bp][0].items():
            blocks[(bp, x, b)] = U[sl].T.copy()
    mps.tensor(site).blocks = blocks
    _push_left(mps, site, fact.f)


def orthonormalize(mps: ConstrainedMPS) -> ConstrainedMPS:
    """Turn every non-centre tensor into an isometry without truncation."""
    pos = mps.center.position
    last_left = pos - 1 if mps.center.is_site else pos
    for i in range(1, last_left + 1):
        _left_orthonormalize(mps, i)
    for i in range(mps.N, pos, -1):
        _right_orthonormalize(mps, i)
    mps.is_canonical = True
    return mps


def canonicalize(mps: ConstrainedMPS, bond: int, cutoff: float = 0.0,
                 max_dim: int | None = None) -> ConstrainedMPS:
    """Bring ``mps`` into canonical form with the centre on ``bond`` (0..N)."""
    if not 0 <= bond <= mps.N:
        raise CenterOutOfRange(f"bond must lie in 0..{mps.N}, got {bond}")
    if not mps.is_canonical:
        orthonormalize(mps)
    if mps.center.is_site:
        if bond >= mps.center.position:
            split_right(mps, cutoff, max_dim)
        else:
            split_left(mps, cutoff, max_dim)
    while mps.center.position < bond:
        shift_center_right(mps, cutoff, max_dim)
    while mps.center.position > bond:
        shift_center_left(mps, cutoff, max_dim)
    return mps


def center_on_site(mps: ConstrainedMPS, site: int, cutoff: float = 0.0,
                   max_dim: int | None = None) -> ConstrainedMPS:
    """Canonical form with the centre on the site tensor ``site``."""
    if not 1 <= site <= mps.N:
        raise CenterOutOfRange(f"site must lie in 1..{mps.N}, got {site}")
    if mps.is_canonical and mps.center.is_site and mps.center.position == site:
        return mps
    canonicalize(mps, site - 1, cutoff, max_dim)
    return absorb_right(mps)


# --- Isometry diagnostics ---

def left_isometry_residual(tensor: BlockTensor) -> float:
    """``max |sum_(a,x) B^T B - 1|`` over the right labels of a left tensor."""
    gram = {}
    for (_, _, c), blk in tensor.blocks.items():
        gram[c] = gram[c] + blk.T @ blk if c in gram else blk.T @ blk
    return max((float(np.max(np.abs(g - np.eye(len(g))))) for g in gram.values()), default=0.0)


def right_isometry_residual(tensor: BlockTensor) -> float:
    """``max |sum_(x,b) B B^T - 1|`` over the left labels of a right tensor."""
    gram = {}
    for (bp, _, _), blk in tensor.blocks.items():
        gram[bp] = gram[bp] + blk @ blk.T if bp in gram else blk @ blk.T
    return max((float(np.max(np.abs(g - np.eye(len(g))))) for g in gram.values()), default=0.0)


def isometry_residual(mps: ConstrainedMPS) -> float:
    """Worst isometry violation over all non-centre tensors."""
    worst = 0.0
    for t in mps.tensors:
        if t.side is Side.LEFT:
            worst = max(worst, left_isometry_residual(t))
        elif t.side is Side.RIGHT:
            worst = max(worst, right_isometry_residual(t))
    return worst
