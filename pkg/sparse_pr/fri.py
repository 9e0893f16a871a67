"""Annihilating-filter (Prony) super-resolution of a 1D sparse ACF.

Roots come either from the minimal-order annihilating filter or, by default,
from the shift invariance of the signal subspace of a large Toeplitz data
matrix. Locations and weights are then polished by nonlinear least squares
on the symmetric ACF model.
"""
from __future__ import annotations

import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import companion, eigvals, lstsq, pinv, svd, toeplitz
from scipy.optimize import least_squares

from .errors import DegenerateInputError, InvalidArgumentError
from .models import AcfAtoms, AnnihilatingFilter, FourierSamples, RootSet, n_differences

log = logging.getLogger(__name__)

RANK_RTOL = 1e-12
MAX_CONDITION = 1e10
# |Im α| above this fraction of max |α| means the locations do not fit the samples.
IMAG_RTOL = 1e-6

RootMethod = Literal["subspace", "prony"]


def _convolution_matrix(values: np.ndarray, order: int) -> np.ndarray:
    # Row i holds A_{order+i}, A_{order+i-1}, ..., A_i so that T @ h = (A * H).
    return toeplitz(values[order:], values[order::-1])


def _check_sample_count(count: int, model_order: int) -> None:
    if model_order < 1:
        raise InvalidArgumentError(f"model order must be at least 1, got {model_order}")
    needed = 2 * model_order + 1
    if count < needed:
        raise InvalidArgumentError(
            f"{count} in-band samples, need at least {needed} for order {model_order}"
        )


def _sorted_roots(roots: np.ndarray) -> RootSet:
    return RootSet.from_array(roots[np.argsort(np.angle(roots), kind="stable")])


def fit_annihilating_filter(samples: FourierSamples, model_order: int) -> AnnihilatingFilter:
    """Total-least-squares annihilating filter from the in-band samples.

    h is the right singular vector of the smallest singular value of the
    Toeplitz convolution matrix, normalised so that h[0] = 1.
    """
    _, values = samples.in_band()
    _check_sample_count(len(values), model_order)
    T = _convolution_matrix(values, model_order)
    _, s, vh = svd(T, full_matrices=False)
    if s[0] == 0:
        raise DegenerateInputError("all in-band samples are zero")
    if s[-2] <= RANK_RTOL * s[0]:
        raise DegenerateInputError(
            f"Toeplitz system is rank deficient (s[-2]/s[0] = {s[-2] / s[0]:.2e})"
        )
    h = np.conj(vh[-1])
    if abs(h[0]) <= RANK_RTOL * np.linalg.norm(h):
        raise DegenerateInputError("leading filter tap vanishes; cannot normalise")
    log.debug("annihilating filter: order=%d, s_min/s_max=%.3e", model_order, s[-1] / s[0])
    return AnnihilatingFilter.from_array(h / h[0])


def annihilation_residual(filt: AnnihilatingFilter, samples: FourierSamples) -> float:
    """‖(A * H)‖₂ / ‖A‖₂ over the in-band samples."""
    _, values = samples.in_band()
    T = _convolution_matrix(values, filt.degree)
    return float(np.linalg.norm(T @ filt.array) / np.linalg.norm(values))


def filter_roots(filt: AnnihilatingFilter) -> RootSet:
    """Roots of H(z) as eigenvalues of its companion matrix."""
    if filt.degree < 1:
        raise InvalidArgumentError("a degree-0 filter has no roots")
    return _sorted_roots(eigvals(companion(filt.array)))


def signal_roots(samples: FourierSamples, model_order: int, pencil: Optional[int] = None) -> RootSet:
    """Roots u_n from the rotational invariance of the signal subspace.

    The Toeplitz data matrix gets ``pencil`` + 1 columns, half the in-band
    samples by default; its leading ``model_order`` left singular vectors
    span {(u_n^i)_i}, and one shift of that basis has eigenvalues u_n.
    """
    _, values = samples.in_band()
    n = len(values)
    _check_sample_count(n, model_order)
    L = n // 2 if pencil is None else pencil
    if not model_order <= L <= n - model_order - 1:
        raise InvalidArgumentError(f"pencil {L} must lie in [{model_order}, {n - model_order - 1}]")
    u, s, _ = svd(_convolution_matrix(values, L), full_matrices=False)
    if s[0] == 0:
        raise DegenerateInputError("all in-band samples are zero")
    log.debug(
        "signal subspace: order=%d, pencil=%d, s[N-1]/s[0]=%.3e",
        model_order, L, s[model_order - 1] / s[0],
    )
    basis = u[:, :model_order]
    shift = lstsq(basis[:-1], basis[1:])[0]
    return _sorted_roots(eigvals(shift))


def roots_to_locations(roots: RootSet, omega: float) -> List[float]:
    """d_n = −∠u_n / Ω on unit-circle-projected roots, symmetrised about 0.

    Locations with |d| ≥ π/Ω alias silently; callers zero-pad to avoid it.
    """
    if not omega > 0:
        raise InvalidArgumentError(f"sampling step must be positive, got {omega}")
    u = roots.array
    t = -np.angle(u) / omega
    if len(t) == 0:
        return []

    by_size = np.argsort(np.abs(t), kind="stable")
    centre: list[float] = []
    rest = t[by_size]
    if len(t) % 2 == 1:
        centre = [0.0]
        rest = rest[1:]

    positive = np.sort(rest[rest > 0])
    negative = np.sort(-rest[rest <= 0])
    if len(positive) == len(negative):
        magnitudes = (positive + negative) / 2
    else:
        # sign split is unbalanced: pair consecutive magnitudes instead
        mags = np.sort(np.abs(rest))
        magnitudes = (mags[0::2] + mags[1::2]) / 2
        log.warning("unbalanced root signs (%d/%d); pairing by magnitude", len(positive), len(negative))
    out = np.concatenate([-magnitudes, centre, magnitudes])
    return np.sort(out).tolist()


def estimate_atom_weights(locations: Sequence[float], samples: FourierSamples) -> List[float]:
    """Least-squares weights α of A_m = Σ α_n·exp(−j·mΩ·d_n); real part kept."""
    d = np.asarray(locations, dtype=float)
    m, values = samples.in_band()
    if len(values) < len(d):
        raise InvalidArgumentError(f"{len(values)} in-band samples for {len(d)} locations")
    V = np.exp(-1j * np.outer(m * samples.sampling_step, d))
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DegenerateInputError(f"Vandermonde system is ill-conditioned (cond = {cond:.2e})")
    alpha = np.asarray(lstsq(V, values)[0])
    scale = float(np.abs(alpha).max()) if alpha.size else 0.0
    imag = float(np.abs(alpha.imag).max()) if alpha.size else 0.0
    if scale > 0 and imag > IMAG_RTOL * scale:
        log.warning("atom weights keep imaginary parts up to %.1e of the largest weight", imag / scale)
    return alpha.real.tolist()


def _mirror_average(locations: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mirror = np.argmin(np.abs(locations[:, None] + locations[None, :]), axis=1)
    return (weights + weights[mirror]) / 2


def refine_atoms(
    locations: Sequence[float],
    weights: Sequence[float],
    samples: FourierSamples,
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Least-squares polish of a symmetric atom set with one atom at 0.

    Fits Re A_m = w_0 + Σ_i 2·w_i·cos(mΩ·p_i) over the in-band m ≥ 0 and
    returns (locations, weights, location_sigma); location_sigma is the
    largest standard error of a fitted location.
    """
    locs = np.asarray(locations, dtype=float)
    w = np.asarray(weights, dtype=float)
    if len(locs) % 2 != 1 or len(locs) != len(w):
        raise InvalidArgumentError("refinement needs an odd, aligned set of locations and weights")
    h = len(locs) // 2
    m, values = samples.in_band()
    keep = m >= 0
    wm = m[keep] * samples.sampling_step
    y = values[keep].real
    if h == 0:
        return np.zeros(1), np.array([float(y.mean())]), 0.0

    order = np.argsort(locs, kind="stable")
    locs, w = locs[order], w[order]
    start = np.concatenate([locs[h + 1:], (w[h + 1:] + w[h - 1::-1]) / 2, [w[h]]])

    def residual(theta: np.ndarray) -> np.ndarray:
        p, v = theta[:h], theta[h:2 * h]
        return theta[-1] + 2 * np.cos(np.outer(wm, p)) @ v - y

    def jacobian(theta: np.ndarray) -> np.ndarray:
        p, v = theta[:h], theta[h:2 * h]
        phase = np.outer(wm, p)
        return np.hstack([
            -2 * np.sin(phase) * wm[:, None] * v[None, :],
            2 * np.cos(phase),
            np.ones((len(wm), 1)),
        ])

    fit = least_squares(residual, start, jac=jacobian, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if not fit.success or not np.all(np.isfinite(fit.x)):
        raise DegenerateInputError(f"atom refinement did not converge: {fit.message}")

    dof = len(y) - len(start)
    s2 = 2 * fit.cost / dof if dof > 0 else 0.0
    cov = s2 * pinv(fit.jac.T @ fit.jac)
    location_sigma = float(np.sqrt(max(float(np.max(np.diag(cov)[:h])), 0.0)))

    p = np.abs(fit.x[:h])
    v = fit.x[h:2 * h]
    by_loc = np.argsort(p, kind="stable")
    p, v = p[by_loc], v[by_loc]
    out_locs = np.concatenate([-p[::-1], [0.0], p])
    out_w = np.concatenate([v[::-1], [fit.x[-1]], v])
    log.debug(
        "refined %d atoms: rms residual %.3e, location sigma %.3e",
        len(out_locs), np.sqrt(2 * fit.cost / len(y)), location_sigma,
    )
    return out_locs, out_w, location_sigma


def superresolve_acf(
    samples: FourierSamples,
    K: int,
    method: RootMethod = "subspace",
    refine: bool = True,
) -> AcfAtoms:
    """Continuous sparse ACF with N = K²−K+1 atoms from Fourier samples.

    ``method`` picks the root finder: the signal subspace (default) or the
    order-N annihilating filter. With ``refine`` the atoms are polished by
    least squares and carry the estimated location noise.
    """
    if K < 2:
        raise InvalidArgumentError(f"K must be at least 2, got {K}")
    order = n_differences(K)
    if method == "subspace":
        roots = signal_roots(samples, order)
    elif method == "prony":
        roots = filter_roots(fit_annihilating_filter(samples, order))
    else:
        raise InvalidArgumentError(f"unknown root method {method!r}")
    locations = np.asarray(roots_to_locations(roots, samples.sampling_step))
    weights = np.asarray(estimate_atom_weights(locations, samples))
    if not refine:
        weights = _mirror_average(locations, weights)
        return AcfAtoms(locations=locations[:, None].tolist(), weights=weights.tolist())
    locations, weights, location_sigma = refine_atoms(locations, weights, samples)
    return AcfAtoms(
        locations=locations[:, None].tolist(),
        weights=weights.tolist(),
        location_sigma=location_sigma,
    )
