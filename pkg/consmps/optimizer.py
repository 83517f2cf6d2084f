# consmps/optimizer.py
"""Annealed generative optimizer over a constrained MPS Born machine.

Each iteration draws a training set from the dictionary of every bitstring
seen so far (Boltzmann weights at the current temperature), resets the model
to the uniform superposition when the best cost of the last batch did not
improve, trains one forward and backward sweep, and samples a fresh batch.
Because the model is a constrained MPS, every sample is feasible.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .canonical import absorb_left, absorb_right, canonicalize, split_left, split_right
from .cmps import (
    BlockTensor, ConstrainedMPS, Env, center_norm_squared, constraints_to_mps, env_lookup,
    evaluate_many, group_samples, left_environments, norm_squared, origin_env,
    right_environments, step_left_env, step_right_env,
)
from .errors import CenterOutOfRange, ConfigError, TrainingError
from .indexing import ConstraintSystem
from .problems import evaluate_costs
from .sampling import sample

log = logging.getLogger(__name__)

# Samples with |psi| below this fraction of sqrt(Z) no longer carry weight.
AMPLITUDE_FLOOR = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    t_max: int = 75
    cutoff: float = 1e-4
    learning_rate: float = 0.05
    n_samples: int = 400
    t_init: float | None = None  # None: standard deviation of the initial costs
    replace_count: int = 40
    seed: int | None = None
    max_dim: int | None = None
    time_limit: float | None = None

    def __post_init__(self):
        problems = []
        if self.t_max < 1:
            problems.append(f"t_max must be >= 1, got {self.t_max}")
        if self.cutoff < 0:
            problems.append(f"cutoff must be >= 0, got {self.cutoff}")
        if self.learning_rate <= 0:
            problems.append(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.n_samples < 1:
            problems.append(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0 < self.replace_count <= self.n_samples:
            problems.append(f"replace_count must lie in 1..{self.n_samples}, got {self.replace_count}")
        if self.t_init is not None and self.t_init <= 0:
            problems.append(f"t_init must be > 0, got {self.t_init}")
        if self.max_dim is not None and self.max_dim < 1:
            problems.append(f"max_dim must be >= 1, got {self.max_dim}")
        if self.time_limit is not None and self.time_limit <= 0:
            problems.append(f"time_limit must be > 0, got {self.time_limit}")
        if problems:
            raise ConfigError("; ".join(problems))


@dataclass(frozen=True)
class HistoryRecord:
    t: int
    temperature: float
    c_min: float
    c_cum_min: float
    max_bond: int
    dict_size: int
    wall_ms: float


@dataclass
class SolveResult:
    best_x: np.ndarray
    best_cost: float
    history: list[HistoryRecord] = field(default_factory=list)
    stop_reason: str = 'max_iterations'
    t_init: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.history)


class SampleDictionary:
    """Every distinct bitstring seen during a run together with its cost.

    The cost function is called once per distinct bitstring.
    """

    def __init__(self, cost: Callable):
        self.cost = cost
        self._index: dict[bytes, int] = {}
        self._rows: list[np.ndarray] = []
        self._costs: list[float] = []

    def __len__(self):
        return len(self._rows)

    def __contains__(self, x) -> bool:
        return np.asarray(x, dtype=np.int8).tobytes() in self._index

    def add_batch(self, X) -> np.ndarray:
        """Insert unseen rows of ``X`` in first-seen order; returns the inserted rows."""
        X = np.atleast_2d(np.asarray(X, dtype=np.int8))
        fresh, seen = [], set()
        for row in X:
            key = row.tobytes()
            if key in self._index or key in seen:
                continue
            seen.add(key)
            fresh.append(row.copy())
        if not fresh:
            return np.zeros((0, X.shape[1]), dtype=np.int8)
        fresh = np.stack(fresh)
        costs = evaluate_costs(self.cost, fresh)
        for row, c in zip(fresh, costs):
            self._index[row.tobytes()] = len(self._rows)
            self._rows.append(row)
            self._costs.append(float(c))
        return fresh

    def costs_of(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.int8))
        return np.array([self._costs[self._index[row.tobytes()]] for row in X])

    @property
    def keys(self) -> np.ndarray:
        return np.stack(self._rows) if self._rows else np.zeros((0, 0), dtype=np.int8)

    @property
    def costs(self) -> np.ndarray:
        return np.asarray(self._costs, dtype=float)

    def best(self) -> tuple[np.ndarray, float]:
        """Lowest cost; among equal costs the lexicographically lowest bitstring."""
        if not self._rows:
            raise ValueError("dictionary is empty")
        costs = self.costs
        ties = np.flatnonzero(costs == costs.min())
        k = min(ties, key=lambda j: tuple(self._rows[j].tolist()))
        return self._rows[k].copy(), self._costs[k]


def boltzmann_weights(costs, T: float) -> np.ndarray:
    """``exp(-C/T)`` normalised, shifted by the minimum cost before exponentiation."""
    costs = np.asarray(getattr(costs, 'costs', costs), dtype=float)
    if T <= 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if not costs.size:
        raise ValueError("no costs to weight")
    w = np.exp(-(costs - costs.min()) / T)
    return w / w.sum()


def anneal_temperature(T_init: float, t: int) -> float:
    if t < 1:
        raise ValueError(f"iteration index starts at 1, got {t}")
    return T_init / t


def select(current: np.ndarray, fresh: np.ndarray, replace_count: int,
           rng: np.random.Generator) -> np.ndarray:
    """Overwrite ``replace_count`` uniformly chosen rows of ``current`` with rows of ``fresh``."""
    current = np.array(current, copy=True)
    if replace_count <= 0:
        return current
    if replace_count > len(current) or replace_count > len(fresh):
        raise ValueError(f"cannot replace {replace_count} of {len(current)} rows from {len(fresh)} fresh ones")
    positions = rng.choice(len(current), size=replace_count, replace=False)
    current[positions] = np.asarray(fresh)[:replace_count]
    return current


# --- Local gradient of the negative log-likelihood ---

def _data_term(tensor: BlockTensor, left_env: Env, right_env: Env, bits: np.ndarray, Z: float):
    """Amplitudes per sample and ``sum_x E(x)/psi(x)`` per block over live samples."""
    n = len(bits)
    la, lrow = env_lookup(left_env, n)
    rb, rrow = env_lookup(right_env, n)
    alive = np.flatnonzero((la >= 0) & (rb >= 0))
    floor = AMPLITUDE_FLOOR * math.sqrt(Z)
    terms, live = {}, 0
    if not alive.size:
        return terms, live
    for key, members in group_samples(la[alive], bits[alive].astype(np.int64), rb[alive]):
        blk = tensor.blocks.get(key)
        if blk is None:
            continue
        pos = alive[members]
        L = left_env[key[0]][1][lrow[pos]]
        R = right_env[key[2]][1][rrow[pos]]
        psi = np.einsum('ij,jk,ik->i', L, blk, R)
        keep = np.abs(psi) > floor
        if not keep.any():
            continue
        live += int(keep.sum())
        terms[key] = (L[keep] / psi[keep, None]).T @ R[keep]
    return terms, live


def _local_gradient(tensor: BlockTensor, left_env: Env, right_env: Env, bits: np.ndarray,
                    Z: float) -> tuple[dict, int]:
    terms, live = _data_term(tensor, left_env, right_env, bits, Z)
    grads = {key: 2.0 * blk / Z for key, blk in tensor.blocks.items()}
    if live:
        for key, term in terms.items():
            grads[key] = grads[key] - (2.0 / live) * term
    return grads, live


def _update_site(mps: ConstrainedMPS, site: int, left_env: Env, right_env: Env,
                 bits: np.ndarray, learning_rate: float):
    tensor = mps.tensor(site)
    Z = center_norm_squared(mps)
    if not Z > 0 or not math.isfinite(Z):
        raise TrainingError(f"centre tensor at site {site} has norm {Z}")
    grads, live = _local_gradient(tensor, left_env, right_env, bits, Z)
    if live < len(bits):
        log.debug(f"[Train] site {site}: skipped {len(bits) - live} samples with vanishing amplitude")
    if not live:
        return
    updated = {key: blk - learning_rate * grads[key] for key, blk in tensor.blocks.items()}
    norm = math.sqrt(sum(float(np.sum(b * b)) for b in updated.values()))
    if not math.isfinite(norm) or norm < np.finfo(float).tiny:
        raise TrainingError(f"centre tensor at site {site} underflowed (norm {norm})")
    tensor.blocks = {key: blk / norm for key, blk in updated.items()}


def train_step(mps: ConstrainedMPS, trainset, cutoff: float, learning_rate: float,
               max_dim: int | None = None) -> ConstrainedMPS:
    """One forward and backward sweep of single-site gradient steps, in place.

    The forward pass updates sites ``1..N``, the backward pass ``N-1..1``;
    every centre move truncates with ``cutoff`` / ``max_dim``. The state ends
    in canonical form with the centre on bond 0.
    """
    X = np.atleast_2d(np.asarray(trainset, dtype=np.int8))
    N, n = mps.N, len(X)
    canonicalize(mps, 0, cutoff, max_dim)
    right_envs = right_environments(mps, X, 0)
    left_envs: list[Env] = [origin_env(n)]

    for i in range(1, N + 1):
        absorb_right(mps)
        _update_site(mps, i, left_envs[i - 1], right_envs[i], X[:, i - 1], learning_rate)
        if i < N:
            split_right(mps, cutoff, max_dim)
            left_envs.append(step_left_env(left_envs[-1], mps.tensor(i), mps.fusion.left[i], X[:, i - 1]))

    renv = origin_env(n)
    for i in range(N - 1, 0, -1):
        split_left(mps, cutoff, max_dim)
        renv = step_right_env(renv, mps.tensor(i + 1), mps.fusion.right[i + 1], X[:, i])
        absorb_left(mps)
        _update_site(mps, i, left_envs[i - 1], renv, X[:, i - 1], learning_rate)
    split_left(mps, cutoff, max_dim)
    return mps


def nll(mps: ConstrainedMPS, trainset) -> float:
    """``-(1/|T|) sum_x log(psi(x)**2 / Z)``; infinite when a sample has zero amplitude."""
    X = np.atleast_2d(np.asarray(trainset, dtype=np.int8))
    psi = evaluate_many(mps, X)
    if np.any(psi == 0):
        return math.inf
    return float(-np.mean(np.log(psi * psi / norm_squared(mps))))


def nll_gradient(mps: ConstrainedMPS, trainset) -> dict:
    """Gradient of :func:`nll` with respect to the blocks of the canonical site centre."""
    if not (mps.is_canonical and mps.center.is_site):
        raise CenterOutOfRange("gradient needs a canonical state centred on a site")
    X = np.atleast_2d(np.asarray(trainset, dtype=np.int8))
    pos = mps.center.position
    lenv = left_environments(mps, X, pos - 1)[-1]
    renv = right_environments(mps, X, pos)[pos]
    grads, _ = _local_gradient(mps.tensor(pos), lenv, renv, X[:, pos - 1], center_norm_squared(mps))
    return grads


# --- Algorithm driver ---

def _initial_temperature(cfg: OptimizerConfig, costs: np.ndarray) -> float:
    if cfg.t_init is not None:
        return float(cfg.t_init)
    spread = float(np.std(costs))
    return spread if spread > 0 else 1.0


def solve(cost: Callable, sys: ConstraintSystem, cfg: OptimizerConfig,
          on_iteration: Callable[[HistoryRecord], None] | None = None) -> SolveResult:
    """Minimise ``cost`` over the feasible bitstrings of ``sys``."""
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    psi0 = canonicalize(constraints_to_mps(sys), 0)
    psi = psi0.copy()

    dictionary = SampleDictionary(cost)
    batch = sample(psi0, cfg.n_samples, rng)
    dictionary.add_batch(batch)
    batch_costs = dictionary.costs_of(batch)
    T_init = _initial_temperature(cfg, batch_costs)
    log.info(f"[Solve] N={sys.N} M={sys.M}: {len(dictionary)} distinct initial samples, T_init={T_init:.6g}")

    c_prev, c_curr = math.inf, float(batch_costs.min())
    c_cum = c_curr
    result = SolveResult(np.zeros(sys.N, dtype=np.int8), math.inf, t_init=T_init)
    for t in range(1, cfg.t_max + 1):
        T = anneal_temperature(T_init, t)
        weights = boltzmann_weights(dictionary.costs, T)
        picks = rng.choice(len(dictionary), size=cfg.n_samples, replace=True, p=weights)
        trainset = dictionary.keys[picks]

        if c_curr >= c_prev:
            log.debug(f"[Solve] iteration {t}: no improvement ({c_curr} >= {c_prev}), resetting")
            psi = psi0.copy()
            trainset = select(trainset, sample(psi0, cfg.replace_count, rng), cfg.replace_count, rng)
        c_prev = c_curr

        train_step(psi, trainset, cfg.cutoff, cfg.learning_rate, cfg.max_dim)
        batch = sample(psi, cfg.n_samples, rng)
        dictionary.add_batch(batch)
        c_curr = float(dictionary.costs_of(batch).min())
        c_cum = min(c_cum, c_curr)

        record = HistoryRecord(t, T, c_curr, c_cum, psi.max_bond_dimension(), len(dictionary),
                               (time.perf_counter() - started) * 1000.0)
        result.history.append(record)
        log.debug(f"[Solve] iteration {t}: T={T:.4g} c_min={c_curr} c_cum_min={c_cum} "
                  f"max_bond={record.max_bond} dict={record.dict_size}")
        if on_iteration is not None:
            on_iteration(record)
        if cfg.time_limit is not None and time.perf_counter() - started >= cfg.time_limit:
            result.stop_reason = 'time_limit'
            log.info(f"[Solve] time limit of {cfg.time_limit}s reached after {t} iterations")
            break

    result.best_x, result.best_cost = dictionary.best()
    log.info(f"[Solve] finished after {result.iterations} iterations: best cost {result.best_cost}")
    return result
