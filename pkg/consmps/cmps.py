# consmps/cmps.py
"""Block-sparse constrained matrix product states.

Every tensor block is labelled ``(left, x, right)`` where ``left`` and
``right`` are positions of QRegions in the precomputed link indices. Tensors
left of the canonical centre use the flux-on-last-site family ``{l_i}`` on
both legs, tensors right of it use the flux-on-first-site family ``{l~_i}``;
the centre is either a site tensor (``l_{i-1}`` on the left, ``l~_i`` on the
right) or a bond matrix ``F`` between ``l_i`` and ``l~_i``.

Because the indices are disjoint, a bitstring selects exactly one label on
every link of each family, which is what makes evaluation, counting and the
norm simple block contractions.
"""
from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import qregion as qr
from .errors import InfeasibleSystem, InstanceError, ResourceLimitExceeded
from .indexing import (
    ConstraintSystem, LinkIndex, constraints_to_indices, hypercube, right_indices,
)

log = logging.getLogger(__name__)

FORMAT_TAG = "consmps-mps"
FORMAT_VERSION = 1


class Side(str, Enum):
    LEFT = 'left'
    FLUX = 'flux'
    RIGHT = 'right'


BlockKey = tuple[int, int, int]


@dataclass
class BlockTensor:
    site: int
    side: Side
    blocks: dict[BlockKey, np.ndarray]

    def copy(self) -> BlockTensor:
        return BlockTensor(self.site, self.side, {k: v.copy() for k, v in self.blocks.items()})

    def left_dims(self) -> dict[int, int]:
        return {a: blk.shape[0] for (a, _, _), blk in self.blocks.items()}

    def right_dims(self) -> dict[int, int]:
        return {b: blk.shape[1] for (_, _, b), blk in self.blocks.items()}

    def __len__(self):
        return len(self.blocks)


@dataclass(frozen=True)
class Center:
    kind: str  # 'site' or 'bond'
    position: int

    @property
    def is_site(self) -> bool:
        return self.kind == 'site'


@dataclass(frozen=True, eq=False)
class Fusion:
    """Fusion tables shared by every MPS built on the same system.

    ``left[i][a, x]`` is the label ``c`` of ``l_i`` with ``l_{i-1}[a] + A_i x ⊆ l_i[c]``
    (or -1); ``right[i][b, x]`` is the label of ``l~_{i-1}`` containing
    ``l~_i[b] + A_i x``. ``compat[i]`` holds the label pairs of ``l_i x l~_i``
    that some feasible bitstring passes through.
    """
    left: tuple[np.ndarray | None, ...]
    right: tuple[np.ndarray | None, ...]
    compat: tuple[frozenset, ...]


def _fusion_table(source: LinkIndex, target: LinkIndex, column) -> np.ndarray:
    table = np.full((len(source), 2), -1, dtype=np.int64)
    for a, region in enumerate(source):
        for x in (0, 1):
            moved = qr.shift(region, column) if x else region
            c = target.locate(moved.first_point())
            if c is not None and qr.is_subset(moved, target[c]):
                table[a, x] = c
    return table


def build_fusion(sys: ConstraintSystem, left: list[LinkIndex], right: list[LinkIndex]) -> Fusion:
    N = sys.N
    ltab: list[np.ndarray | None] = [None] * (N + 1)
    rtab: list[np.ndarray | None] = [None] * (N + 1)
    for i in range(1, N + 1):
        col = sys.column(i)
        ltab[i] = _fusion_table(left[i - 1], left[i], col)
        rtab[i] = _fusion_table(right[i], right[i - 1], col)

    compat: list[frozenset] = [frozenset()] * (N + 1)
    compat[N] = frozenset((c, 0) for c in range(len(left[N])))
    for i in range(N, 0, -1):
        preimage = defaultdict(list)
        for a in range(len(left[i - 1])):
            for x in (0, 1):
                c = int(ltab[i][a, x])
                if c >= 0:
                    preimage[(c, x)].append(a)
        pairs = set()
        for c, b in compat[i]:
            for x in (0, 1):
                bp = int(rtab[i][b, x])
                if bp >= 0:
                    pairs.update((a, bp) for a in preimage.get((c, x), ()))
        compat[i - 1] = frozenset(pairs)
    if not compat[0]:
        raise InfeasibleSystem("infeasible: the two index families admit no common path")
    return Fusion(tuple(ltab), tuple(rtab), tuple(compat))


class ConstrainedMPS:
    """Chain of block-sparse tensors plus the index families they are labelled by."""

    def __init__(self, system: ConstraintSystem, left: list[LinkIndex], right: list[LinkIndex],
                 fusion: Fusion, tensors: list[BlockTensor], center: Center,
                 flux_matrix: dict[tuple[int, int], np.ndarray] | None = None):
        self.system = system
        self.left = left
        self.right = right
        self.fusion = fusion
        self.tensors = tensors
        self.center = center
        self.flux_matrix = flux_matrix
        self.discarded_weight = 0.0
        self.is_canonical = False

    @property
    def N(self) -> int:
        return self.system.N

    @property
    def M(self) -> int:
        return self.system.M

    def tensor(self, site: int) -> BlockTensor:
        return self.tensors[site - 1]

    def copy(self) -> ConstrainedMPS:
        """Deep copy of the blocks; indices and fusion tables are shared."""
        other = ConstrainedMPS(
            self.system, self.left, self.right, self.fusion,
            [t.copy() for t in self.tensors], self.center,
            None if self.flux_matrix is None else {k: v.copy() for k, v in self.flux_matrix.items()},
        )
        other.discarded_weight = self.discarded_weight
        other.is_canonical = self.is_canonical
        return other

    def block_counts(self) -> list[int]:
        return [len(t) for t in self.tensors]

    def link_block_counts(self) -> list[int]:
        """Blocks with a leg on each link ``0..N``, from the site tensors on either side."""
        counts = self.block_counts()
        return [sum(counts[max(i - 1, 0):i + 1]) for i in range(self.N + 1)]

    def n_blocks(self) -> int:
        return sum(self.block_counts())

    def bond_dimensions(self) -> list[int]:
        """Total dimension of links ``1..N-1``."""
        return [sum(self.tensor(i).right_dims().values()) for i in range(1, self.N)]

    def max_bond_dimension(self) -> int:
        dims = self.bond_dimensions()
        return max(dims) if dims else 1

    def __repr__(self):
        return (f"ConstrainedMPS(N={self.N}, M={self.M}, center={self.center.kind}:{self.center.position}, "
                f"blocks={self.n_blocks()}, max_bond={self.max_bond_dimension()})")


def _skeleton(fusion: Fusion, N: int, flux_site: int):
    """Admissible block keys per site for a flux tensor at ``flux_site``."""
    keys = []
    for i in range(1, N + 1):
        site_keys = []
        if i < flux_site:
            table = fusion.left[i]
            site_keys = [(a, x, int(table[a, x])) for a in range(table.shape[0]) for x in (0, 1)
                         if table[a, x] >= 0]
        elif i > flux_site:
            table = fusion.right[i]
            site_keys = [(int(table[b, x]), x, b) for b in range(table.shape[0]) for x in (0, 1)
                         if table[b, x] >= 0]
        else:
            by_left = defaultdict(list)
            for c, b in fusion.compat[i]:
                by_left[c].append(b)
            table = fusion.left[i]
            for a in range(table.shape[0]):
                for x in (0, 1):
                    c = int(table[a, x])
                    if c >= 0:
                        site_keys.extend((a, x, b) for b in sorted(by_left.get(c, ())))
        keys.append(sorted(site_keys))
    return keys


def _side_of(site: int, flux_site: int) -> Side:
    if site < flux_site:
        return Side.LEFT
    return Side.FLUX if site == flux_site else Side.RIGHT


def constraints_to_mps(sys: ConstraintSystem, flux_site: int | None = None) -> ConstrainedMPS:
    """Uniform superposition of all feasible bitstrings, every block the scalar 1."""
    N = sys.N
    m = N if flux_site is None else int(flux_site)
    if not 1 <= m <= N:
        raise InstanceError(f"flux site must lie in 1..{N}, got {m}")
    left = constraints_to_indices(sys)
    right = right_indices(sys)
    fusion = build_fusion(sys, left, right)
    tensors = []
    for i, keys in enumerate(_skeleton(fusion, N, m), start=1):
        tensors.append(BlockTensor(i, _side_of(i, m), {k: np.ones((1, 1)) for k in keys}))
    mps = ConstrainedMPS(sys, left, right, fusion, tensors, Center('site', m))
    log.debug(f"[Embed] built {mps!r}")
    return mps


def random_mps(sys: ConstraintSystem, rng: np.random.Generator, max_dim: int = 2,
               flux_site: int | None = None) -> ConstrainedMPS:
    """Constrained MPS with random block dimensions in ``1..max_dim`` and normal entries."""
    mps = constraints_to_mps(sys, flux_site)
    N, m = mps.N, mps.center.position
    ldims = [[1] * len(mps.left[i]) if i == 0 else list(rng.integers(1, max_dim + 1, len(mps.left[i])))
             for i in range(N + 1)]
    rdims = [[1] * len(mps.right[i]) if i == N else list(rng.integers(1, max_dim + 1, len(mps.right[i])))
             for i in range(N + 1)]
    for t in mps.tensors:
        i = t.site
        row_dims = rdims[i - 1] if t.side is Side.RIGHT else ldims[i - 1]
        col_dims = ldims[i] if t.side is Side.LEFT else rdims[i]
        t.blocks = {(a, x, b): rng.standard_normal((int(row_dims[a]), int(col_dims[b])))
                    for (a, x, b) in sorted(t.blocks)}
    return mps


# --- Batched contraction over explicit bitstrings ---
# An environment maps a label to (sample positions, one row vector per sample).

Env = dict[int, tuple[np.ndarray, np.ndarray]]


def origin_env(n: int) -> Env:
    return {0: (np.arange(n), np.ones((n, 1)))}


def _merge(parts) -> Env:
    env = {}
    for label in sorted(parts):
        chunks = parts[label]
        idx = np.concatenate([c[0] for c in chunks])
        mat = np.concatenate([c[1] for c in chunks], axis=0)
        env[label] = (idx, mat)
    return env


def step_left_env(env: Env, tensor: BlockTensor, table: np.ndarray, bits: np.ndarray) -> Env:
    """Carry row vectors from link ``i-1`` to link ``i`` through a left-family tensor."""
    parts = defaultdict(list)
    for a, (idx, mat) in env.items():
        xs = bits[idx]
        for x in (0, 1):
            c = int(table[a, x])
            if c < 0:
                continue
            blk = tensor.blocks.get((a, x, c))
            if blk is None:
                continue
            sel = xs == x
            if sel.any():
                parts[c].append((idx[sel], mat[sel] @ blk))
    return _merge(parts)


def step_right_env(env: Env, tensor: BlockTensor, table: np.ndarray, bits: np.ndarray) -> Env:
    """Carry column vectors (stored as rows) from link ``i`` to link ``i-1``."""
    parts = defaultdict(list)
    for b, (idx, mat) in env.items():
        xs = bits[idx]
        for x in (0, 1):
            bp = int(table[b, x])
            if bp < 0:
                continue
            blk = tensor.blocks.get((bp, x, b))
            if blk is None:
                continue
            sel = xs == x
            if sel.any():
                parts[bp].append((idx[sel], mat[sel] @ blk.T))
    return _merge(parts)


def left_environments(mps: ConstrainedMPS, X: np.ndarray, upto: int) -> list[Env]:
    """Environments at links ``0..upto``; sites ``1..upto`` must be left tensors."""
    envs = [origin_env(len(X))]
    for i in range(1, upto + 1):
        envs.append(step_left_env(envs[-1], mps.tensor(i), mps.fusion.left[i], X[:, i - 1]))
    return envs


def right_environments(mps: ConstrainedMPS, X: np.ndarray, start: int) -> list[Env | None]:
    """Environments at links ``start..N`` (others None); sites ``start+1..N`` must be right tensors."""
    envs: list[Env | None] = [None] * (mps.N + 1)
    envs[mps.N] = origin_env(len(X))
    for i in range(mps.N, start, -1):
        envs[i - 1] = step_right_env(envs[i], mps.tensor(i), mps.fusion.right[i], X[:, i - 1])
    return envs


def env_lookup(env: Env, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample label (or -1) and row position inside the environment."""
    labels = np.full(n, -1, dtype=np.int64)
    rows = np.full(n, -1, dtype=np.int64)
    for label, (idx, _) in env.items():
        labels[idx] = label
        rows[idx] = np.arange(len(idx))
    return labels, rows


def group_samples(*columns: np.ndarray):
    """Yield ``(key, positions)`` for each distinct row of the stacked label columns."""
    stacked = np.stack(columns, axis=1)
    keys, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    order = np.argsort(inverse, kind='stable')
    bounds = np.searchsorted(inverse[order], np.arange(len(keys) + 1))
    for k, key in enumerate(keys):
        yield tuple(int(v) for v in key), order[bounds[k]:bounds[k + 1]]


def close_site(left_env: Env, right_env: Env, tensor: BlockTensor, bits: np.ndarray) -> np.ndarray:
    n = len(bits)
    amps = np.zeros(n)
    la, lrow = env_lookup(left_env, n)
    rb, rrow = env_lookup(right_env, n)
    alive = np.flatnonzero((la >= 0) & (rb >= 0))
    if not alive.size:
        return amps
    for (a, x, b), members in group_samples(la[alive], bits[alive].astype(np.int64), rb[alive]):
        blk = tensor.blocks.get((a, x, b))
        if blk is None:
            continue
        pos = alive[members]
        L = left_env[a][1][lrow[pos]]
        R = right_env[b][1][rrow[pos]]
        amps[pos] = np.einsum('ij,jk,ik->i', L, blk, R)
    return amps


def close_bond(left_env: Env, right_env: Env, flux_matrix: dict, n: int) -> np.ndarray:
    amps = np.zeros(n)
    lc, lrow = env_lookup(left_env, n)
    rb, rrow = env_lookup(right_env, n)
    alive = np.flatnonzero((lc >= 0) & (rb >= 0))
    if not alive.size:
        return amps
    for (c, b), members in group_samples(lc[alive], rb[alive]):
        F = flux_matrix.get((c, b))
        if F is None:
            continue
        pos = alive[members]
        amps[pos] = np.einsum('ij,jk,ik->i', left_env[c][1][lrow[pos]], F, right_env[b][1][rrow[pos]])
    return amps


def evaluate_many(mps: ConstrainedMPS, X) -> np.ndarray:
    """Amplitudes ``psi(x)`` for every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.int8))
    if X.shape[1] != mps.N:
        raise ValueError(f"bitstrings must have length {mps.N}, got {X.shape[1]}")
    n, pos = len(X), mps.center.position
    if mps.center.is_site:
        lenv = left_environments(mps, X, pos - 1)[-1]
        renv = right_environments(mps, X, pos)[pos]
        return close_site(lenv, renv, mps.tensor(pos), X[:, pos - 1])
    lenv = left_environments(mps, X, pos)[-1]
    renv = right_environments(mps, X, pos)[pos]
    return close_bond(lenv, renv, mps.flux_matrix, n)


def evaluate(mps: ConstrainedMPS, x) -> float:
    return float(evaluate_many(mps, np.asarray(x)[None, :])[0])


def dense_amplitudes(mps: ConstrainedMPS, max_n: int = 20) -> np.ndarray:
    """Every amplitude, ordered with ``x_1`` as the most significant bit."""
    if mps.N > max_n:
        raise ResourceLimitExceeded(f"dense expansion limited to N <= {max_n}, got N={mps.N}")
    return evaluate_many(mps, hypercube(mps.N))


# --- Full contractions ---

def _contract(mps: ConstrainedMPS, gram: bool) -> float:
    pos = mps.center.position
    last_left = pos - 1 if mps.center.is_site else pos
    one = np.ones((1, 1)) if gram else np.ones(1)

    left = {0: one}
    for i in range(1, last_left + 1):
        nxt = {}
        for (a, x, c), blk in mps.tensor(i).blocks.items():
            if a not in left:
                continue
            term = blk.T @ left[a] @ blk if gram else left[a] @ blk
            nxt[c] = nxt[c] + term if c in nxt else term
        left = nxt

    right = {0: one}
    for i in range(mps.N, pos, -1):
        nxt = {}
        for (bp, x, b), blk in mps.tensor(i).blocks.items():
            if b not in right:
                continue
            term = blk @ right[b] @ blk.T if gram else blk @ right[b]
            nxt[bp] = nxt[bp] + term if bp in nxt else term
        right = nxt

    total = 0.0
    if mps.center.is_site:
        items = (((a, b), blk) for (a, _, b), blk in mps.tensor(pos).blocks.items())
    else:
        items = iter(mps.flux_matrix.items())
    for (a, b), blk in items:
        if a not in left or b not in right:
            continue
        if gram:
            total += float(np.trace(blk.T @ left[a] @ blk @ right[b]))
        else:
            total += float(left[a] @ blk @ right[b])
    return total


def count_solutions(mps: ConstrainedMPS) -> float:
    """``sum_x psi(x)``; the number of feasible bitstrings for a freshly built MPS.

    Exact while the count stays below 2**53.
    """
    return _contract(mps, gram=False)


def norm_squared(mps: ConstrainedMPS) -> float:
    """``Z = sum_x psi(x)**2`` by transfer contraction."""
    return _contract(mps, gram=True)


def center_norm_squared(mps: ConstrainedMPS) -> float:
    """Squared Frobenius norm of the centre; equals ``Z`` in canonical form."""
    if mps.center.is_site:
        blocks = mps.tensor(mps.center.position).blocks.values()
    else:
        blocks = mps.flux_matrix.values()
    return float(sum(np.sum(b * b) for b in blocks))


# --- Serialization ---

def _blocks_to_list(blocks: dict) -> list[dict]:
    out = []
    for key in sorted(blocks):
        blk = blocks[key]
        entry = {'key': [int(k) for k in key], 'shape': list(blk.shape), 'data': blk.reshape(-1).tolist()}
        out.append(entry)
    return out


def _blocks_from_list(entries: list[dict]) -> dict:
    return {tuple(e['key']): np.asarray(e['data'], dtype=float).reshape(e['shape']) for e in entries}


def mps_to_dict(mps: ConstrainedMPS) -> dict:
    sys = mps.system
    return {
        'format': FORMAT_TAG,
        'version': FORMAT_VERSION,
        'N': sys.N,
        'M': sys.M,
        'A': sys.A.tolist(),
        'l': sys.lower.tolist(),
        'u': sys.upper.tolist(),
        'flux': qr.format_qregion(sys.flux),
        'left_indices': [[qr.format_qregion(q) for q in link] for link in mps.left],
        'right_indices': [[qr.format_qregion(q) for q in link] for link in mps.right],
        'center': {'kind': mps.center.kind, 'position': mps.center.position},
        'canonical': mps.is_canonical,
        'discarded_weight': mps.discarded_weight,
        'tensors': [{'site': t.site, 'side': t.side.value, 'blocks': _blocks_to_list(t.blocks)}
                    for t in mps.tensors],
        'flux_matrix': None if mps.flux_matrix is None else _blocks_to_list(mps.flux_matrix),
    }


def mps_from_dict(data: dict) -> ConstrainedMPS:
    if data.get('format') != FORMAT_TAG:
        raise InstanceError(f"not a serialized constrained MPS (format={data.get('format')!r})")
    if data.get('version') != FORMAT_VERSION:
        raise InstanceError(f"unsupported MPS format version {data.get('version')!r}")
    sys = ConstraintSystem(data['A'], data['l'], data['u'])
    M = sys.M
    left = [LinkIndex(tuple(qr.parse_qregion(q, M) for q in link)) for link in data['left_indices']]
    right = [LinkIndex(tuple(qr.parse_qregion(q, M) for q in link)) for link in data['right_indices']]
    if len(left) != sys.N + 1 or len(right) != sys.N + 1:
        raise InstanceError("index families must list N+1 links")
    fusion = build_fusion(sys, left, right)
    tensors = [BlockTensor(int(t['site']), Side(t['side']), _blocks_from_list(t['blocks']))
               for t in data['tensors']]
    flux_matrix = None if data['flux_matrix'] is None else _blocks_from_list(data['flux_matrix'])
    center = Center(data['center']['kind'], int(data['center']['position']))
    mps = ConstrainedMPS(sys, left, right, fusion, tensors, center, flux_matrix)
    mps.discarded_weight = float(data['discarded_weight'])
    mps.is_canonical = bool(data['canonical'])
    return mps


def dump_mps(mps: ConstrainedMPS, path) -> None:
    Path(path).write_text(json.dumps(mps_to_dict(mps)) + "\n", encoding='utf-8')


def load_mps(path) -> ConstrainedMPS:
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise InstanceError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return mps_from_dict(data)
