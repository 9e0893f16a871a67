from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np

from .errors import (
    AmplitudeDomainError,
    InconsistentMeasurementError,
    InvalidArgumentError,
    LabelingError,
)
from .models import AcfAtoms, Amplitudes, Support, WeightMatrix, n_differences
from .support import nearest

log = logging.getLogger(__name__)

DEFAULT_LABEL_TOL = 1e-6


def symmetrize(C) -> np.ndarray:
    """(C + Cᵀ)/2 with a zero diagonal."""
    C = np.asarray(C, dtype=float)
    S = (C + C.T) / 2
    np.fill_diagonal(S, 0.0)
    return S


def assemble_weight_matrix(
    atoms: AcfAtoms,
    support: Support,
    tolerance: Optional[float] = None,
    sigma_hint: Optional[float] = None,
) -> WeightMatrix:
    """C_ij = weight of the ACF atom nearest to x̂_i − x̂_j.

    The labeling tolerance defaults to max(1e-6, 10·sigma_hint); the hint
    falls back to the location noise the atoms carry.
    """
    locs, w = atoms.array
    X = support.array
    K = len(X)
    if atoms.size != n_differences(K):
        raise InvalidArgumentError(f"{atoms.size} atoms, expected {n_differences(K)} for K={K}")
    if locs.shape[1] != X.shape[1]:
        raise InvalidArgumentError("atoms and support have different dimensions")
    if tolerance is None:
        if sigma_hint is None:
            sigma_hint = atoms.location_sigma
        tolerance = max(DEFAULT_LABEL_TOL, 10 * sigma_hint) if sigma_hint else DEFAULT_LABEL_TOL

    i, j = np.nonzero(~np.eye(K, dtype=bool))
    d2, idx = nearest(X[i] - X[j], locs)
    worst = float(np.sqrt(d2.max()))
    if worst > tolerance:
        raise LabelingError(f"nearest ACF atom is {worst:.3e} away (tolerance {tolerance:.1e})")
    C = np.zeros((K, K))
    C[i, j] = w[idx]

    _, zero = nearest(np.zeros((1, locs.shape[1])), locs)
    return WeightMatrix(entries=symmetrize(C).tolist(), acf_zero=float(w[zero[0]]))


def _two_point_amplitudes(c12: float, acf_zero: Optional[float]) -> Amplitudes:
    if acf_zero is None:
        raise InvalidArgumentError("K=2 amplitude recovery needs the ACF value at the origin")
    gap = acf_zero - 2 * c12
    if gap < -1e-12 * max(acf_zero, 1.0):
        raise InconsistentMeasurementError(
            f"ACF at origin {acf_zero} is below 2·C12 = {2 * c12}; no real solution"
        )
    total = math.sqrt(acf_zero + 2 * c12)
    diff = math.sqrt(max(gap, 0.0))
    return Amplitudes(values=[(total + diff) / 2, (total - diff) / 2])


def recover_amplitudes(W: WeightMatrix) -> Amplitudes:
    """Amplitudes from C = ccᵀ through the log-domain row-sum identity.

    With L_ij = log C_ij = ℓ_i + ℓ_j and s = Σ_{i≠j} L_ij,
    ℓ = (rowsum(L) − s/(2(K−1))) / (K−2). K = 2 falls back to
    c1·c2 = C12, c1² + c2² = a0 with c1 ≥ c2.
    """
    C = symmetrize(W.array)
    K = len(C)
    off = ~np.eye(K, dtype=bool)
    if np.any(C[off] <= 0):
        raise AmplitudeDomainError("off-diagonal weights must be strictly positive")
    if K == 2:
        return _two_point_amplitudes(float(C[0, 1]), W.acf_zero)

    L = np.zeros_like(C)
    L[off] = np.log(C[off])
    s = L.sum()
    ell = (L.sum(axis=1) - s / (2 * (K - 1))) / (K - 2)
    return Amplitudes(values=np.exp(ell).tolist())
