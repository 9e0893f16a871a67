"""Error measures that ignore the trivial shift/reflection ambiguity."""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import pdist

from .errors import InvalidArgumentError
from .models import Support

EXHAUSTIVE_MAX_K = 8


def _as_points(points) -> np.ndarray:
    if isinstance(points, Support):
        return points.array
    arr = np.asarray(points, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise InvalidArgumentError(f"point sets differ in shape: {a.shape} vs {b.shape}")


@lru_cache(maxsize=None)
def _permutations(K: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(K))), dtype=int)


def _min_assignment(cost: np.ndarray) -> float:
    K = len(cost)
    if K <= EXHAUSTIVE_MAX_K:
        perms = _permutations(K)
        return float(cost[np.arange(K), perms].sum(axis=1).min())
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def _min_spacing(X: np.ndarray) -> float:
    if len(X) < 2:
        return math.inf
    return float(pdist(X, "chebyshev").min())


def _sq_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)


def l2_error_aligned(truth, estimate) -> float:
    """min over r ∈ {±1}, shift s and matching π of Σ_k ‖r·x̂_π(k) + s − x_k‖².

    Returns the total squared error.
    """
    X = _as_points(truth)
    E = _as_points(estimate)
    _check_pair(X, E)
    Xc = X - X.mean(axis=0)
    best = np.inf
    for r in (1.0, -1.0):
        Ec = r * E
        Ec = Ec - Ec.mean(axis=0)
        best = min(best, _min_assignment(_sq_cost(Xc, Ec)))
    return max(0.0, best)


def index_based_error(estimate, truth, sigma: float = 0.0, atol: float = 1e-9) -> int:
    """0 if the estimate is {x_k − x_ℓ*} or its reflection for some ℓ*, else 1.

    Each matched point may deviate by max(6σ, atol) per coordinate, capped at
    half the smallest spacing of the truth so that a deviation is attributable
    to one point only.
    """
    E = _as_points(estimate)
    X = _as_points(truth)
    _check_pair(E, X)
    tol = min(max(6.0 * sigma, atol), _min_spacing(X) / 2)
    for anchor in X:
        for r in (1.0, -1.0):
            form = r * (X - anchor)
            rows, cols = linear_sum_assignment(_sq_cost(form, E))
            if np.abs(form[rows] - E[cols]).max() <= tol:
                return 0
    return 1


def success_rate(errors: Iterable[float], threshold: float) -> float:
    """Fraction of errors ≤ threshold; NaN and inf count as failures."""
    errs = np.asarray(list(errors), dtype=float)
    if errs.size == 0:
        raise InvalidArgumentError("no errors to summarise")
    if not threshold > 0:
        raise InvalidArgumentError(f"threshold must be positive, got {threshold}")
    return float(np.mean(errs <= threshold))


def form_error(estimate, truth) -> float:
    """Squared error against the closest solution form r·(X − x_ℓ*), no shift re-fit.

    This is the error whose mean the (K − 1)σ² law predicts.
    """
    E = _as_points(estimate)
    X = _as_points(truth)
    _check_pair(E, X)
    best = math.inf
    for anchor in X:
        for r in (1.0, -1.0):
            best = min(best, _min_assignment(_sq_cost(r * (X - anchor), E)))
    return best
