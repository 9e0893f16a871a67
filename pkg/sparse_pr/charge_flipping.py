"""Charge Flipping baseline on a periodic 1D grid.

Alternates a real-space step (flip the sign of every value below δ) with a
reciprocal-space step (keep the phases, impose the measured |F|). δ = b·θ
is tied to the standard deviation θ of the iterate and decays per epoch.
The magnitudes are blurred by a Gaussian so that off-grid atoms stay
positive blobs instead of ringing Dirichlet kernels.
"""
from __future__ import annotations

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .errors import DegenerateOutputError, InvalidArgumentError
from .models import FlipConfig, FourierSamples, Support

log = logging.getLogger(__name__)


def grid_magnitudes(samples: FourierSamples, grid_size: int) -> np.ndarray:
    """|F_m| = sqrt(|A_m|) laid out in DFT order for a ``grid_size`` grid.

    The Nyquist bin of an even grid takes m = +grid_size/2.
    """
    if grid_size < 2:
        raise InvalidArgumentError(f"grid_size must be at least 2, got {grid_size}")
    half = grid_size // 2
    if samples.M < half:
        raise InvalidArgumentError(f"{grid_size} bins need M ≥ {half}, samples have M={samples.M}")
    n = np.arange(grid_size)
    m = np.where(n <= half, n, n - grid_size)
    a = samples.array[m + samples.M]
    return np.sqrt(np.abs(a))


def project_magnitudes(signal, magnitudes) -> np.ndarray:
    """Keep the DFT phases of ``signal``, impose ``magnitudes`` and return the real part."""
    F = np.fft.fft(np.asarray(signal, dtype=float))
    size = np.abs(F)
    phase = np.where(size > 0, F / np.where(size > 0, size, 1.0), 1.0)
    return np.fft.ifft(np.asarray(magnitudes, dtype=float) * phase).real


def _random_symmetric_phases(G: int, rng: np.random.Generator) -> np.ndarray:
    phi = rng.uniform(0.0, 2 * np.pi, size=G)
    n = np.arange(G)
    mirror = (-n) % G
    phi = np.where(n < mirror, phi, -phi[mirror])
    phi[n == mirror] = 0.0
    return phi


def blur_weights(grid_size: int, blur: float) -> np.ndarray:
    """Gaussian temperature factor exp(−2π²·blur²·(m/G)²) in DFT order; blur in cells."""
    m = np.fft.fftfreq(grid_size)
    return np.exp(-2 * np.pi ** 2 * blur ** 2 * m ** 2)


def _single_run(
    mags: np.ndarray,
    config: FlipConfig,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, float, int]:
    """One run on blurred magnitudes; returns its best flipped iterate and residual."""
    rho = np.fft.ifft(mags * np.exp(1j * _random_symmetric_phases(len(mags), rng))).real
    best, best_residual = rho, math.inf
    delta = 0.0
    it = 0
    for it in range(config.max_iters):
        if it % config.epoch == 0:
            delta = config.b * float(np.std(rho)) * config.delta_decay ** (it // config.epoch)
        flipped = np.where(rho < delta, -rho, rho)
        F = np.fft.fft(flipped)
        size = np.abs(F)
        residual = float(np.linalg.norm(size - mags))
        if residual < best_residual:
            best, best_residual = flipped, residual
        phase = np.where(size > 0, F / np.where(size > 0, size, 1.0), 1.0)
        rho = np.fft.ifft(mags * phase).real
        total = float(np.abs(rho).sum())
        negative = float(-rho[rho < 0].sum()) / total if total > 0 else 0.0
        if negative < config.stop_fraction:
            break
    return best, best_residual, it + 1


def charge_flip(magnitudes, config: Optional[FlipConfig] = None) -> np.ndarray:
    """Best-of-restarts Charge Flipping reconstruction on a ``grid_size`` grid.

    Iterations run on magnitudes blurred by a Gaussian of ``config.blur``
    cells. Restart i is seeded with ``config.seed + i``; the lowest-residual
    flipped iterate over all runs wins (lowest index on ties) and is
    returned with the measured magnitudes imposed.
    """
    config = config or FlipConfig()
    mags = np.asarray(magnitudes, dtype=float)
    if mags.ndim != 1 or len(mags) != config.grid_size:
        raise InvalidArgumentError(f"expected {config.grid_size} magnitudes, got shape {mags.shape}")
    if np.any(mags < 0) or not np.all(np.isfinite(mags)):
        raise InvalidArgumentError("magnitudes must be finite and non-negative")
    if not np.any(mags > 0):
        raise InvalidArgumentError("all magnitudes are zero")

    blurred = mags * blur_weights(len(mags), config.blur)
    best, best_residual = None, math.inf
    for r in range(config.restarts):
        flipped, residual, iters = _single_run(blurred, config, np.random.default_rng(config.seed + r))
        log.debug("restart %d: residual %.4e after %d iterations", r, residual, iters)
        if best is None or residual < best_residual:
            best, best_residual = flipped, residual
    return project_magnitudes(best, mags)


def extract_support_from_grid(signal, K: int) -> Support:
    """Cells of the K largest |values| as index/grid_size in [0, 1); no peak merging."""
    if K < 2:
        raise InvalidArgumentError(f"K must be at least 2, got {K}")
    values = np.abs(np.asarray(signal, dtype=float))
    if np.count_nonzero(values) < K:
        raise DegenerateOutputError(f"fewer than {K} nonzero grid cells")
    cells = np.sort(np.argsort(-values, kind="stable")[:K])
    return Support.from_array(cells / len(values))


def unwrap_circular(positions, period: float) -> np.ndarray:
    """Cut a periodic point set at its largest gap; the result starts at 0."""
    p = np.sort(np.mod(np.asarray(positions, dtype=float).ravel(), period))
    gaps = np.diff(np.append(p, p[0] + period))
    cut = int(np.argmax(gaps))
    out = np.concatenate([p[cut + 1:], p[: cut + 1] + period])
    return out - out[0]
