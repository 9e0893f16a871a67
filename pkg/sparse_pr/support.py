"""Greedy support recovery from unlabeled pairwise differences.

The solver grows a partial solution X̂ = {0, d̃_N, ...} one point at a time,
each time accepting the candidate p from the pool whose differences to the
points already placed are best explained by the measured set D̃. Optional
extensions: cached per-pair minima, pruning of used differences, a
symmetric cost and denoising of the partial solution.
"""
from __future__ import annotations

import itertools
import logging
from typing import List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from .errors import DegenerateOutputError, InvalidArgumentError, RefusedError
from .models import DifferenceSet, PartialSolution, RecoveryConfig, Support, n_differences

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_K = 6
_BRUTE_FORCE_CHUNK = 2048


def nearest(targets: np.ndarray, pool: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Squared distance to, and index of, the nearest pool row for each target.

    Ties go to the lowest pool index.
    """
    d2 = ((targets[:, None, :] - pool[None, :, :]) ** 2).sum(axis=-1)
    idx = np.argmin(d2, axis=1)
    return d2[np.arange(len(targets)), idx], idx


def _diff_array(diffs) -> np.ndarray:
    if isinstance(diffs, DifferenceSet):
        return diffs.array
    arr = np.asarray(diffs, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def _pair_minima(
    point: np.ndarray,
    candidates: np.ndarray,
    work: np.ndarray,
    work_idx: np.ndarray,
    symmetric: bool,
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Per-candidate min ‖p − x̂ − d‖² over the working set (plus the mirrored term)."""
    t = candidates - point
    values, j = nearest(t, work)
    forward = work_idx[j]
    backward = None
    if symmetric:
        back_values, jb = nearest(-t, work)
        values = values + back_values
        backward = work_idx[jb]
    return values, forward, backward


def _prune_mask(
    diffs: np.ndarray,
    alive: np.ndarray,
    previous: np.ndarray,
    new_point: np.ndarray,
) -> np.ndarray:
    alive = alive.copy()
    for x in previous:
        for target in (x - new_point, new_point - x):
            idx = np.flatnonzero(alive)
            if len(idx) == 0:
                return alive
            _, j = nearest(target[None, :], diffs[idx])
            alive[idx[j[0]]] = False
    return alive


def _label_pairs(points: np.ndarray, diffs: np.ndarray) -> np.ndarray:
    k = len(points)
    labels = np.zeros((k, k, points.shape[1]))
    i, j = np.triu_indices(k, 1)
    _, idx = nearest(points[i] - points[j], diffs)
    labels[i, j] = diffs[idx]
    labels[j, i] = -diffs[idx]
    return labels


def _denoise(labels: np.ndarray) -> np.ndarray:
    points = labels.mean(axis=1)
    return points - points[0]


def candidate_cost(
    p,
    partial: PartialSolution,
    diffs: DifferenceSet,
    symmetric: bool = False,
) -> float:
    """Σ_x̂ min_d ‖p − x̂ − d‖² (+ min_d′ ‖x̂ − p − d′‖² when symmetric)."""
    D = _diff_array(diffs)
    p = np.asarray(p, dtype=float).reshape(1, -1)
    idx = np.arange(len(D))
    total = 0.0
    for x in partial.points:
        values, _, _ = _pair_minima(x, p, D, idx, symmetric)
        total += float(values[0])
    return total


def prune_used_differences(
    partial: PartialSolution,
    new_point,
    diffs: DifferenceSet,
    working: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Remove from the working set the nearest match of each ±(x̂ − new_point).

    ``working`` holds indices into ``diffs`` (all of them by default); the
    surviving indices are returned. Each element is removed at most once.
    """
    D = _diff_array(diffs)
    alive = np.zeros(len(D), dtype=bool)
    alive[np.arange(len(D)) if working is None else np.asarray(working, dtype=int)] = True
    new_point = np.asarray(new_point, dtype=float).ravel()
    return np.flatnonzero(_prune_mask(D, alive, partial.points, new_point))


def label_partial(partial: PartialSolution, diffs: DifferenceSet) -> PartialSolution:
    """Attach d̂_ij labels: nearest element of ``diffs`` to x̂_i − x̂_j."""
    labels = _label_pairs(partial.points, _diff_array(diffs))
    return partial.model_copy(update={"labels": labels})


def denoise_partial(partial: PartialSolution) -> PartialSolution:
    """x̂_i ← mean_j d̂_ij, then translate so that x̂_1 = 0."""
    if partial.labels is None:
        raise InvalidArgumentError("denoising needs pair labels; call label_partial first")
    k = len(partial.points)
    if partial.labels.shape[:2] != (k, k):
        raise InvalidArgumentError(f"labels of shape {partial.labels.shape} for {k} points")
    return partial.model_copy(update={"points": _denoise(partial.labels)})


def support_cost(points, diffs) -> float:
    """Σ over ordered pairs i ≠ j of min_d ‖x̂_i − x̂_j − d‖²."""
    X = _diff_array(points)
    D = _diff_array(diffs)
    i, j = np.nonzero(~np.eye(len(X), dtype=bool))
    values, _ = nearest(X[i] - X[j], D)
    return float(values.sum())


class _GreedySolver:
    def __init__(self, diffs: np.ndarray, config: RecoveryConfig):
        self.diffs = diffs
        self.config = config
        n = len(diffs)
        self.alive = np.ones(n, dtype=bool)
        self.pool = np.ones(n, dtype=bool)
        self.pool[[0, n - 1]] = False
        self.points = np.vstack([np.zeros_like(diffs[0]), diffs[-1]])
        # labels[i, j] ≈ x̂_i − x̂_j, taken from the differences that matched when i or j was placed
        zero = np.zeros_like(diffs[-1])
        self.labels = np.array([[zero, -diffs[-1]], [diffs[-1], zero]])
        # cached rows: (values, forward argmin, backward argmin) over all N columns
        self.rows: List[Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]] = []
        if config.prune_differences:
            self._prune(self.points[:1], diffs[-1])

    def _prune(self, previous: np.ndarray, new_point: np.ndarray) -> None:
        self.alive = _prune_mask(self.diffs, self.alive, previous, new_point)
        self.pool &= self.alive

    def _minima(self, point: np.ndarray, cand_idx: np.ndarray):
        work_idx = np.flatnonzero(self.alive)
        return _pair_minima(
            point,
            self.diffs[cand_idx],
            self.diffs[work_idx],
            work_idx,
            self.config.symmetric_cost,
        )

    def _cached_row(self, i: int, pool_idx: np.ndarray) -> np.ndarray:
        n = len(self.diffs)
        if i == len(self.rows):
            values = np.full(n, np.inf)
            forward = np.full(n, -1)
            backward = np.full(n, -1) if self.config.symmetric_cost else None
            self.rows.append((values, forward, backward))
            stale = pool_idx
        else:
            values, forward, backward = self.rows[i]
            dead = ~self.alive[forward[pool_idx]]
            if backward is not None:
                dead |= ~self.alive[backward[pool_idx]]
            stale = pool_idx[dead]
        if len(stale):
            v, f, b = self._minima(self.points[i], stale)
            values[stale] = v
            forward[stale] = f
            if backward is not None:
                backward[stale] = b
        return values[pool_idx]

    def _new_labels(self, chosen: int) -> np.ndarray:
        values = []
        for x in self.points:
            _, forward, backward = self._minima(x, np.array([chosen]))
            label = self.diffs[forward[0]]
            if backward is not None:
                label = (label - self.diffs[backward[0]]) / 2
            values.append(label)
        return np.asarray(values)

    def _append_labels(self, new: np.ndarray) -> None:
        k, dim = len(self.labels), self.labels.shape[2]
        grown = np.zeros((k + 1, k + 1, dim))
        grown[:k, :k] = self.labels
        grown[k, :k] = new
        grown[:k, k] = -new
        self.labels = grown

    def _costs(self, pool_idx: np.ndarray) -> np.ndarray:
        if self.config.use_caching:
            rows = [self._cached_row(i, pool_idx) for i in range(len(self.points))]
        else:
            rows = [self._minima(x, pool_idx)[0] for x in self.points]
        return np.sum(np.vstack(rows), axis=0)

    def step(self) -> None:
        pool_idx = np.flatnonzero(self.pool)
        if len(pool_idx) == 0:
            raise DegenerateOutputError(
                f"candidate pool exhausted with {len(self.points)} points placed"
            )
        costs = self._costs(pool_idx)
        best = int(np.argmin(costs))
        chosen = pool_idx[best]
        new_point = self.diffs[chosen]
        if self.config.denoise_partials:
            self._append_labels(self._new_labels(chosen))
        previous = self.points
        self.points = np.vstack([previous, new_point])
        self.pool[chosen] = False
        if self.config.prune_differences:
            self._prune(previous, new_point)
        if self.config.denoise_partials and len(self.points) >= 3:
            self.points = _denoise(self.labels)
        log.debug(
            "placed point %d (diff #%d, cost %.3e); pool=%d working=%d",
            len(self.points),
            chosen,
            costs[best],
            int(self.pool.sum()),
            int(self.alive.sum()),
        )


def recover_support(
    diffs: DifferenceSet,
    K: int,
    config: Optional[RecoveryConfig] = None,
    dimension: Optional[int] = None,
) -> Support:
    """Greedy recovery of K points whose differences explain ``diffs``.

    The output starts with x̂_1 = 0 and x̂_2 = d̃_N.
    """
    config = config or RecoveryConfig()
    D = diffs.array
    if K < 2:
        raise InvalidArgumentError(f"K must be at least 2, got {K}")
    if len(D) != n_differences(K):
        raise InvalidArgumentError(f"{len(D)} differences, expected {n_differences(K)} for K={K}")
    if dimension is not None and dimension != D.shape[1]:
        raise InvalidArgumentError(f"dimension {dimension} does not match {D.shape[1]}-D differences")

    solver = _GreedySolver(D, config)
    while len(solver.points) < K:
        solver.step()
    try:
        return Support.from_array(solver.points)
    except ValidationError as e:
        raise DegenerateOutputError(f"recovered support is not a valid point set: {e}") from e


def brute_force_turnpike(diffs: DifferenceSet, K: int) -> Support:
    """Exhaustive minimiser of support_cost over {0, d̃_N} ∪ (K−2 further differences)."""
    if K > BRUTE_FORCE_MAX_K:
        raise RefusedError(f"brute force is limited to K ≤ {BRUTE_FORCE_MAX_K}, got {K}")
    if K < 2:
        raise InvalidArgumentError(f"K must be at least 2, got {K}")
    D = diffs.array
    n = len(D)
    if n != n_differences(K):
        raise InvalidArgumentError(f"{n} differences, expected {n_differences(K)} for K={K}")
    fixed = np.vstack([np.zeros_like(D[0]), D[-1]])
    if K == 2:
        return Support.from_array(fixed)

    i, j = np.nonzero(~np.eye(K, dtype=bool))
    best_cost, best_combo = np.inf, None
    combos = itertools.combinations(range(1, n - 1), K - 2)
    while True:
        chunk = np.array(list(itertools.islice(combos, _BRUTE_FORCE_CHUNK)), dtype=int)
        if len(chunk) == 0:
            break
        X = np.concatenate([np.broadcast_to(fixed, (len(chunk),) + fixed.shape), D[chunk]], axis=1)
        pair = (X[:, i] - X[:, j]).reshape(-1, D.shape[1])
        values, _ = nearest(pair, D)
        cost = values.reshape(len(chunk), -1).sum(axis=1)
        k = int(np.argmin(cost))
        if cost[k] < best_cost:
            best_cost, best_combo = cost[k], chunk[k]
    log.debug("brute force optimum cost %.3e", best_cost)
    try:
        return Support.from_array(np.vstack([fixed, D[best_combo]]))
    except ValidationError as e:
        raise DegenerateOutputError(f"optimal subset is not a valid point set: {e}") from e
