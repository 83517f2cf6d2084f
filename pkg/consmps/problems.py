# consmps/problems.py
"""Instance generators, cost functions and exhaustive oracles.

Generators are pure functions of their parameters and seed; every random draw
goes through ``numpy.random.default_rng`` (PCG64).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import InfeasibleSystem, InstanceError, ResourceLimitExceeded
from .indexing import ConstraintSystem, hypercube

log = logging.getLogger(__name__)

INSTANCE_TYPES = ('qkp', 'facility', 'cardinality', 'raw')
ORACLE_CHUNK = 1 << 16


# --- Instances ---

@dataclass(frozen=True, eq=False)
class QKPInstance:
    """``min x.Qx`` subject to ``w.x <= W``."""
    Q: np.ndarray
    w: np.ndarray
    W: int
    seed: int | None = None

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=np.int64)
        w = np.asarray(self.w, dtype=np.int64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise InstanceError(f"Q must be square, got shape {Q.shape}")
        if w.shape != (Q.shape[0],):
            raise InstanceError(f"w must have length {Q.shape[0]}, got {w.shape}")
        if np.any(w < 0):
            raise InstanceError("w entries must be non-negative")
        object.__setattr__(self, 'Q', Q)
        object.__setattr__(self, 'w', w)
        object.__setattr__(self, 'W', int(self.W))

    @property
    def N(self) -> int:
        return len(self.w)

    @property
    def system(self) -> ConstraintSystem:
        return ConstraintSystem(self.w[None, :], [0], [self.W])


@dataclass(frozen=True, eq=False)
class FacilityInstance:
    A: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    seed: int | None = None

    @property
    def system(self) -> ConstraintSystem:
        return ConstraintSystem(self.A, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class Instance:
    """What the command line works on: a constraint system plus optional QKP data."""
    kind: str
    system: ConstraintSystem
    qkp: QKPInstance | None = None
    seed: int | None = None
    label: str = field(default='')

    @property
    def N(self) -> int:
        return self.system.N


# --- Generators ---

def gen_cardinality(N: int, lower: int, upper: int) -> ConstraintSystem:
    """``lower <= x_1 + ... + x_N <= upper``."""
    if N < 1:
        raise InstanceError(f"N must be positive, got {N}")
    if not 0 <= lower <= upper:
        raise InstanceError(f"need 0 <= l <= u, got l={lower}, u={upper}")
    return ConstraintSystem(np.ones((1, N), dtype=np.int64), [lower], [upper])


def gen_qkp(N: int, seed: int | None = None) -> QKPInstance:
    """Random QKP: ``Q`` uniform on [-5, 5], ``w`` on [0, 5], ``W = N // 4``.

    All ``N*N`` entries of ``Q`` are drawn independently; ``Q`` is not symmetrised.
    """
    if N < 1:
        raise InstanceError(f"N must be positive, got {N}")
    rng = np.random.default_rng(seed)
    Q = rng.integers(-5, 6, size=(N, N))
    w = rng.integers(0, 6, size=N)
    return QKPInstance(Q, w, N // 4, seed)


def gen_facility(N: int, M: int, u: int, seed: int | None = None) -> FacilityInstance:
    """``M`` demand rows, each served by ``N // 10`` random facilities, ``2 <= A x <= u``."""
    k = N // 10
    if k < 2:
        raise InstanceError(f"facility instances need N // 10 >= 2, got N={N}")
    if M < 1:
        raise InstanceError(f"need at least one demand row, got M={M}")
    if u < 2:
        raise InstanceError(f"upper bound must be at least the lower bound 2, got u={u}")
    rng = np.random.default_rng(seed)
    A = np.zeros((M, N), dtype=np.int64)
    for row in range(M):
        A[row, rng.choice(N, size=k, replace=False)] = 1
    return FacilityInstance(A, np.full(M, 2, dtype=np.int64), np.full(M, int(u), dtype=np.int64), seed)


# --- Costs ---

class QKPCost:
    """``x.Qx`` as an exact integer."""

    def __init__(self, inst: QKPInstance):
        self.inst = inst

    def __call__(self, x) -> int:
        return qkp_cost(self.inst, x)

    def batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        return np.einsum('ri,ij,rj->r', X, self.inst.Q, X)


class LinearCost:
    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=np.int64)

    def __call__(self, x) -> int:
        return int(np.asarray(x, dtype=np.int64) @ self.weights)

    def batch(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.int64) @ self.weights


def qkp_cost(inst: QKPInstance, x) -> int:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (inst.N,):
        raise ValueError(f"bitstring must have length {inst.N}, got {x.shape}")
    return int(x @ inst.Q @ x)


def _require_qkp(instance: Instance, name: str) -> QKPInstance:
    if instance.qkp is None:
        raise InstanceError(f"cost '{name}' needs a qkp instance, got type '{instance.kind}'")
    return instance.qkp


COSTS: dict[str, Callable[[Instance], Callable]] = {
    'qkp': lambda inst: QKPCost(_require_qkp(inst, 'qkp')),
    'zero': lambda inst: LinearCost(np.zeros(inst.N, dtype=np.int64)),
    'neg-weight': lambda inst: LinearCost(-_require_qkp(inst, 'neg-weight').w),
}


def make_cost(name: str, instance: Instance):
    try:
        factory = COSTS[name]
    except KeyError:
        raise InstanceError(f"unknown cost '{name}'; choose from {', '.join(sorted(COSTS))}") from None
    return factory(instance)


def evaluate_costs(cost, X: np.ndarray) -> np.ndarray:
    """Costs of every row of ``X``, through ``cost.batch`` when the cost offers one."""
    batch = getattr(cost, 'batch', None)
    if batch is not None:
        return np.asarray(batch(X))
    return np.array([cost(row) for row in X])


# --- Families for the command line ---

def _cardinality_family(N, seed=None, lower=None, upper=None, rows=None):
    lower = N // 2 if lower is None else lower
    upper = lower if upper is None else upper
    return Instance('cardinality', gen_cardinality(N, lower, upper), seed=seed,
                    label=f"cardinality(N={N},l={lower},u={upper})")


def _qkp_family(N, seed=None, lower=None, upper=None, rows=None):
    inst = gen_qkp(N, seed)
    return Instance('qkp', inst.system, qkp=inst, seed=seed, label=f"qkp(N={N},seed={seed})")


def _facility_family(N, seed=None, lower=None, upper=None, rows=None):
    rows = 2 if rows is None else rows
    upper = 2 if upper is None else upper
    inst = gen_facility(N, rows, upper, seed)
    return Instance('facility', inst.system, seed=seed, label=f"facility(N={N},M={rows},u={upper},seed={seed})")


FAMILIES: dict[str, Callable[..., Instance]] = {
    'cardinality': _cardinality_family,
    'qkp': _qkp_family,
    'facility': _facility_family,
}


# --- Exhaustive oracles ---

def _check_size(sys: ConstraintSystem, max_n: int):
    if sys.N > max_n:
        raise ResourceLimitExceeded(f"enumeration limited to N <= {max_n}, got N={sys.N}")


def brute_force_count(sys: ConstraintSystem, max_n: int = 24) -> int:
    """Number of feasible bitstrings by enumerating all ``2**N``."""
    _check_size(sys, max_n)
    total = 0
    for start in range(0, 2**sys.N, ORACLE_CHUNK):
        X = hypercube(sys.N, start, min(start + ORACLE_CHUNK, 2**sys.N))
        total += int(np.count_nonzero(sys.is_feasible(X)))
    log.debug(f"[Oracle] N={sys.N}: {total} feasible bitstrings")
    return total


def brute_force_solve(sys: ConstraintSystem, cost, max_n: int = 24) -> tuple[np.ndarray, float]:
    """Exact constrained minimum; ties go to the lexicographically lowest bitstring."""
    _check_size(sys, max_n)
    best_x, best_c = None, None
    for start in range(0, 2**sys.N, ORACLE_CHUNK):
        X = hypercube(sys.N, start, min(start + ORACLE_CHUNK, 2**sys.N))
        X = X[np.atleast_1d(sys.is_feasible(X))]
        if not len(X):
            continue
        costs = evaluate_costs(cost, X)
        k = int(np.argmin(costs))
        if best_c is None or costs[k] < best_c:
            best_x, best_c = X[k].copy(), costs[k]
    if best_x is None:
        raise InfeasibleSystem("infeasible: no bitstring satisfies the constraints")
    best_c = best_c.item() if hasattr(best_c, 'item') else best_c
    log.debug(f"[Oracle] N={sys.N}: minimum cost {best_c}")
    return best_x, best_c


# --- Instance files ---

def _int_array(value, name: str, ndim: int, shape=None) -> np.ndarray:
    """Integer array with positional diagnostics such as ``A[1][3]``."""
    def walk(v, path, depth):
        if depth == 0:
            if isinstance(v, bool) or not isinstance(v, int):
                raise InstanceError(f"{path}: expected an integer, got {v!r}")
            return
        if not isinstance(v, list):
            raise InstanceError(f"{path}: expected a list, got {type(v).__name__}")
        for k, item in enumerate(v):
            walk(item, f"{path}[{k}]", depth - 1)

    walk(value, name, ndim)
    if not value:
        raise InstanceError(f"{name}: must not be empty")
    if ndim == 2:
        widths = {len(r) for r in value}
        if len(widths) > 1:
            raise InstanceError(f"{name}: rows have different lengths {sorted(widths)}")
    arr = np.asarray(value, dtype=np.int64).reshape((len(value), -1) if ndim == 2 else (len(value),))
    if shape is not None and arr.shape != shape:
        raise InstanceError(f"{name}: expected shape {shape}, got {arr.shape}")
    return arr


def instance_from_dict(data: dict, label: str = '') -> Instance:
    from .forms import InstanceHeaderForm, validate_or_raise

    if not isinstance(data, dict):
        raise InstanceError("instance file must hold a JSON object")
    for key in ('type', 'N', 'M', 'A', 'l', 'u'):
        if key not in data:
            raise InstanceError(f"missing required field '{key}'")
    header = {k: data.get(k) for k in ('type', 'N', 'M', 'W', 'seed')}
    for k in ('N', 'M', 'W', 'seed'):
        v = header[k]
        if v is not None and (isinstance(v, bool) or not isinstance(v, int)):
            raise InstanceError(f"{k}: expected an integer, got {v!r}")
    validate_or_raise(InstanceHeaderForm(data=header), InstanceError)

    N, M = data['N'], data['M']
    A = _int_array(data['A'], 'A', 2, (M, N))
    lower = _int_array(data['l'], 'l', 1, (M,))
    upper = _int_array(data['u'], 'u', 1, (M,))
    sys = ConstraintSystem(A, lower, upper)
    seed = data.get('seed')
    qkp = None
    if data['type'] == 'qkp':
        if 'Q' not in data or 'w' not in data or data.get('W') is None:
            raise InstanceError("qkp instances need fields Q, w and W")
        Q = _int_array(data['Q'], 'Q', 2, (N, N))
        w = _int_array(data['w'], 'w', 1, (N,))
        qkp = QKPInstance(Q, w, data['W'], seed)
    return Instance(data['type'], sys, qkp=qkp, seed=seed, label=label)


def instance_to_dict(instance: Instance) -> dict:
    sys = instance.system
    data = {
        'type': instance.kind,
        'N': sys.N,
        'M': sys.M,
        'A': sys.A.tolist(),
        'l': sys.lower.tolist(),
        'u': sys.upper.tolist(),
    }
    if instance.qkp is not None:
        data.update(Q=instance.qkp.Q.tolist(), w=instance.qkp.w.tolist(), W=instance.qkp.W)
    if instance.seed is not None:
        data['seed'] = int(instance.seed)
    return data


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise InstanceError(f"{path}: {e.strerror or e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return instance_from_dict(data, label=path.name)


def dump_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1) + "\n", encoding='utf-8')
