from __future__ import annotations

import logging
from typing import Optional

from .amplitudes import assemble_weight_matrix, recover_amplitudes
from .errors import SparsePRError
from .fri import superresolve_acf
from .models import FourierSamples, Reconstruction, RecoveryConfig
from .support import recover_support

log = logging.getLogger(__name__)


def reconstruct(
    samples: FourierSamples,
    K: int,
    config: Optional[RecoveryConfig] = None,
    label_tolerance: Optional[float] = None,
) -> Reconstruction:
    """Fourier samples → ACF atoms → support → amplitudes.

    Each stage that fails leaves the earlier results in place and adds a
    message to ``flags["warnings"]``.
    """
    config = config or RecoveryConfig()
    warnings: list[str] = []
    flags = {"warnings": warnings, "recovery": config.label(), "K": K}

    try:
        atoms = superresolve_acf(samples, K)
    except SparsePRError as e:
        warnings.append(f"ACF super-resolution failed: {type(e).__name__}: {e}")
        return Reconstruction(flags=flags)

    try:
        support = recover_support(atoms.to_difference_set(), K, config, dimension=1)
    except SparsePRError as e:
        warnings.append(f"Support recovery failed: {type(e).__name__}: {e}")
        return Reconstruction(atoms=atoms, flags=flags)

    amplitudes = None
    try:
        W = assemble_weight_matrix(atoms, support, tolerance=label_tolerance)
        amplitudes = recover_amplitudes(W)
    except SparsePRError as e:
        warnings.append(f"Amplitude recovery failed: {type(e).__name__}: {e}")

    if warnings:
        log.warning("reconstruction finished with %d warning(s)", len(warnings))
    return Reconstruction(atoms=atoms, support=support, amplitudes=amplitudes, flags=flags)
