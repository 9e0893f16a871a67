"""Synthetic measurements: support → ACF atoms → Fourier samples → noise."""
from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import pdist

from .errors import CollisionError, InvalidArgumentError
from .models import (
    AcfAtoms,
    Amplitudes,
    DifferenceSet,
    FourierSamples,
    KernelDescriptor,
    Support,
)

log = logging.getLogger(__name__)

# Two pairwise differences closer than this are treated as a collision.
COLLISION_TOL = 1e-9
_MAX_RESAMPLES = 1000

Bounds = Union[Tuple[float, float], Sequence[Tuple[float, float]]]


def _points(support) -> np.ndarray:
    if isinstance(support, Support):
        return support.array
    arr = np.asarray(support, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def pair_differences(points) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All x_k − x_ℓ for k ≠ ℓ, with the (k, ℓ) index arrays."""
    X = _points(points)
    k, l = np.nonzero(~np.eye(len(X), dtype=bool))
    return X[k] - X[l], k, l


def has_collision(points, tol: float = COLLISION_TOL) -> bool:
    diffs, _, _ = pair_differences(points)
    if len(diffs) < 2:
        return False
    return bool(pdist(diffs).min() <= tol)


def _axis_bounds(bounds: Bounds, D: int) -> np.ndarray:
    arr = np.asarray(bounds, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (D, 1))
    if arr.shape != (D, 2):
        raise InvalidArgumentError(f"bounds must be one (lo, hi) pair or {D} of them")
    if np.any(arr[:, 1] <= arr[:, 0]) or not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("every axis needs finite bounds with lo < hi")
    return arr


def synthesize_support(K: int, D: int = 1, bounds: Bounds = (0.0, 1.0), seed: int = 0) -> Support:
    """K points i.i.d. uniform over ``bounds``; collision-prone draws are resampled."""
    if K < 2:
        raise InvalidArgumentError(f"K must be at least 2, got {K}")
    if D not in (1, 2):
        raise InvalidArgumentError(f"only D in {{1, 2}} is supported, got {D}")
    box = _axis_bounds(bounds, D)
    rng = np.random.default_rng(seed)
    for attempt in range(_MAX_RESAMPLES):
        X = rng.uniform(box[:, 0], box[:, 1], size=(K, D))
        if not has_collision(X):
            if attempt:
                log.debug("support resampled %d times to avoid collisions", attempt)
            return Support.from_array(X)
    raise InvalidArgumentError("could not draw a collision-free support within the bounds")


def build_acf_atoms(support: Support, amps: Amplitudes) -> AcfAtoms:
    X = support.array
    c = amps.array
    if len(c) != len(X):
        raise InvalidArgumentError(f"{len(c)} amplitudes for {len(X)} support points")
    if has_collision(X):
        raise CollisionError("two distinct point pairs share the same difference")
    diffs, k, l = pair_differences(X)
    locations = np.vstack([diffs, np.zeros((1, X.shape[1]))])
    weights = np.append(c[k] * c[l], np.sum(c**2))
    order = np.lexsort(locations.T[::-1])
    return AcfAtoms(locations=locations[order].tolist(), weights=weights[order].tolist())


def difference_set(
    points,
    *,
    check_collisions: bool = False,
    sigma_hint: Optional[float] = None,
) -> DifferenceSet:
    """Clean difference multiset {x_k − x_ℓ : k ≠ ℓ} ∪ {0}, sorted by norm.

    Accepts raw point arrays, including degenerate configurations with
    coincident points.
    """
    X = _points(points)
    if len(X) < 2:
        raise InvalidArgumentError("need at least 2 points")
    if check_collisions and has_collision(X):
        raise CollisionError("two distinct point pairs share the same difference")
    diffs, _, _ = pair_differences(X)
    vectors = np.vstack([np.zeros((1, X.shape[1])), diffs])
    return DifferenceSet.from_vectors(vectors, sigma_hint=sigma_hint)


def acf_fourier_samples(
    atoms: AcfAtoms,
    kernel: KernelDescriptor,
    omega: float,
    M: Optional[int] = None,
) -> FourierSamples:
    """A_m = Σ_n w_n·exp(−j·mΩ·d_n)·|Φ(mΩ)|² for m = −M…M (1D atoms only)."""
    if atoms.dimension != 1:
        raise InvalidArgumentError("Fourier sampling is implemented for 1D atoms only")
    if not omega > 0:
        raise InvalidArgumentError(f"sampling step must be positive, got {omega}")
    if M is None:
        M = 2 * atoms.size
    if M < atoms.size:
        raise InvalidArgumentError(f"M={M} is smaller than the {atoms.size} atoms")
    locs, w = atoms.array
    m = np.arange(M + 1)
    half = np.exp(-1j * np.outer(m * omega, locs[:, 0])) @ w
    half = half * kernel.response(m * omega)
    half[0] = half[0].real
    values = np.concatenate([np.conj(half[:0:-1]), half])
    return FourierSamples.from_array(values, sampling_step=omega, kernel=kernel)


def add_difference_noise(clean: DifferenceSet, sigma: float, seed: int = 0) -> DifferenceSet:
    """d̃ = d + ν with ν ~ N(0, σ²) i.i.d. per coordinate, re-sorted by norm."""
    if sigma < 0 or not math.isfinite(sigma):
        raise InvalidArgumentError(f"sigma must be finite and non-negative, got {sigma}")
    if sigma == 0:
        return DifferenceSet(diffs=clean.diffs, sigma_hint=0.0)
    rng = np.random.default_rng(seed)
    arr = clean.array
    noisy = arr + rng.normal(0.0, sigma, size=arr.shape)
    return DifferenceSet.from_vectors(noisy, sigma_hint=sigma)


def add_fourier_noise(samples: FourierSamples, snr_db: float, seed: int = 0) -> FourierSamples:
    """Additive white Gaussian noise at ``snr_db``, mirrored to keep A_{−m} = conj(A_m).

    Signal power is the mean |A_m|² over the passband; ``snr_db = inf``
    leaves the samples unchanged.
    """
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise InvalidArgumentError(f"snr_db must be a number or +inf, got {snr_db}")
    if snr_db == math.inf:
        return samples.model_copy()
    a = samples.array
    M = samples.M
    _, band = samples.in_band()
    if len(band) == 0:
        raise InvalidArgumentError("no samples fall in the kernel passband")
    variance = float(np.mean(np.abs(band) ** 2)) / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    positive = math.sqrt(variance / 2) * (rng.normal(size=M) + 1j * rng.normal(size=M))
    zero = math.sqrt(variance) * rng.normal()
    noise = np.concatenate([np.conj(positive[::-1]), [zero], positive])
    return FourierSamples.from_array(a + noise, samples.sampling_step, samples.kernel)


def random_amplitudes(K: int, kind: str = "unit", seed: int = 0) -> Amplitudes:
    """Unit amplitudes, or i.i.d. uniform on [0.5, 1.5]."""
    if kind == "unit":
        return Amplitudes(values=[1.0] * K)
    if kind == "uniform":
        rng = np.random.default_rng(seed)
        return Amplitudes(values=rng.uniform(0.5, 1.5, size=K).tolist())
    raise InvalidArgumentError(f"unknown amplitude distribution {kind!r}")
