# consmps/sampling.py
"""Exact sampling of bitstrings from ``|psi(x)|**2 / Z``.

The state is brought to canonical form with the centre on bond 0, so every
site tensor is a right isometry and the conditional probability of each bit is
a squared row norm. All samples advance together one site at a time.
"""
from __future__ import annotations

import logging

import numpy as np

from .canonical import canonicalize
from .cmps import ConstrainedMPS
from .errors import ConsMPSError

log = logging.getLogger(__name__)


def _layout(*dim_maps: dict[int, int]) -> tuple[dict[int, slice], int]:
    dims: dict[int, int] = {}
    for dm in dim_maps:
        for label, d in dm.items():
            if dims.setdefault(label, d) != d:
                raise ConsMPSError(f"label {label} has inconsistent block dimensions {dims[label]} and {d}")
    slices, offset = {}, 0
    for label in sorted(dims):
        slices[label] = slice(offset, offset + dims[label])
        offset += dims[label]
    return slices, offset


def _site_matrices(blocks: dict, rows: dict[int, slice], n_rows: int,
                   cols: dict[int, slice], n_cols: int) -> list[np.ndarray]:
    mats = [np.zeros((n_rows, n_cols)), np.zeros((n_rows, n_cols))]
    for (bp, x, b), blk in blocks.items():
        mats[x][rows[bp], cols[b]] = blk
    return mats


def sample(mps: ConstrainedMPS, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` independent bitstrings; the input MPS is left untouched.

    Returns an ``int8`` array of shape ``(count, N)``. Every row is feasible.
    """
    count = int(count)
    if count < 0:
        raise ValueError(f"sample count must be non-negative, got {count}")
    N = mps.N
    out = np.zeros((count, N), dtype=np.int8)
    if count == 0:
        return out

    state = canonicalize(mps.copy(), 0)
    flux = state.flux_matrix
    first = state.tensor(1)
    cols, width = _layout({bp: F.shape[1] for (_, bp), F in flux.items()}, first.left_dims())
    row = np.zeros(width)
    for (_, bp), F in flux.items():
        row[cols[bp]] = F[0]
    norm = np.linalg.norm(row)
    if norm == 0.0:
        raise ConsMPSError("cannot sample from a state with zero norm")
    V = np.tile(row / norm, (count, 1))

    for i in range(1, N + 1):
        t = state.tensor(i)
        nxt = state.tensor(i + 1).left_dims() if i < N else {}
        next_cols, next_width = _layout(t.right_dims(), nxt)
        M0, M1 = _site_matrices(t.blocks, cols, width, next_cols, next_width)
        W0, W1 = V @ M0, V @ M1
        p0 = np.einsum('ij,ij->i', W0, W0)
        p1 = np.einsum('ij,ij->i', W1, W1)
        u = rng.random(count)
        take_one = u * (p0 + p1) >= p0
        out[:, i - 1] = take_one
        W = np.where(take_one[:, None], W1, W0)
        p = np.where(take_one, p1, p0)
        V = W / np.sqrt(np.maximum(p, np.finfo(float).tiny))[:, None]
        cols, width = next_cols, next_width
    log.debug(f"[Sample] drew {count} bitstrings over N={N}")
    return out
