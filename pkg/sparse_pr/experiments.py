"""Seeded Monte-Carlo experiment drivers.

Every driver takes an ExperimentSpec and returns a ResultTable; write_results
turns it into a CSV file plus a JSON manifest. Trials are independent tasks
seeded from (master seed, cell, trial), so serial and pooled runs agree.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .charge_flipping import charge_flip, extract_support_from_grid, grid_magnitudes, unwrap_circular
from .errors import InvalidArgumentError, SparsePRError
from .metrics import index_based_error, l2_error_aligned, success_rate
from .models import ExperimentSpec, FlipConfig, KernelDescriptor, RecoveryConfig, ResultTable
from .pipeline import reconstruct
from .support import recover_support
from .synthesis import (
    acf_fourier_samples,
    add_difference_noise,
    add_fourier_noise,
    build_acf_atoms,
    difference_set,
    random_amplitudes,
    synthesize_support,
)
from .theory import success_probability, transition_sigma

log = logging.getLogger(__name__)

WORKERS = int(os.getenv("SPR_WORKERS", "1"))

_ALL_IMPROVEMENTS = {"prune_differences": True, "symmetric_cost": True, "denoise_partials": True}

EXPERIMENT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "phase-transition": {
        "k_grid": [5, 8, 12],
        "noise_grid": np.logspace(-4, -1, 7).tolist(),
        "trials": 200,
        "dimensions": [2, 1],
    },
    "ablation": {
        "k_grid": [6],
        "noise_grid": [0.0, 0.002, 0.005, 0.01, 0.02],
        "trials": 200,
        "dimension": 1,
    },
    "star": {
        "k_grid": [4],
        "noise_grid": [0.01],
        "trials": 20,
        "star_grid": 20,
        "dimension": 1,
        "recovery": _ALL_IMPROVEMENTS,
    },
    "caching": {
        "k_grid": [10, 15, 20, 25, 30],
        "noise_grid": [0.0],
        "trials": 1,
        "repetitions": 20,
        "dimension": 1,
    },
    "cf-comparison": {
        "k_grid": [5],
        "noise_grid": [math.inf, 40.0, 30.0, 20.0, 10.0],
        "trials": 50,
        "coefficients": 200,
        "dimension": 1,
    },
}

# Fourier sampling for the Charge Flipping comparison: period twice the support extent.
CF_PERIOD = 2.0


def load_spec(experiment: str, config_path: Optional[Path] = None, **overrides) -> ExperimentSpec:
    """Per-experiment defaults, then the JSON config file, then explicit overrides."""
    if experiment not in EXPERIMENT_DEFAULTS:
        raise InvalidArgumentError(f"unknown experiment {experiment!r}")
    data = copy.deepcopy(EXPERIMENT_DEFAULTS[experiment])
    if config_path is not None:
        data.update(json.loads(Path(config_path).read_text(encoding="utf-8")))
    data.update({k: v for k, v in overrides.items() if v is not None})
    data["experiment"] = experiment
    return ExperimentSpec.model_validate(data)


def trial_seed(master: int, cell: int, trial: int) -> int:
    digest = hashlib.blake2b(f"{master}/{cell}/{trial}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def content_hash(data: bytes) -> str:
    """Git blob id of ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def fit_power_law(ks: Sequence[float], seconds: Sequence[float]) -> Tuple[float, float]:
    """(C, alpha) of seconds ≈ C·K^alpha by least squares in log-log space."""
    k = np.asarray(ks, dtype=float)
    t = np.asarray(seconds, dtype=float)
    if len(k) < 2 or len(k) != len(t) or np.any(k <= 0) or np.any(t <= 0):
        raise InvalidArgumentError("need ≥ 2 positive (K, seconds) pairs")
    alpha, log_c = np.polyfit(np.log(k), np.log(t), 1)
    return float(np.exp(log_c)), float(alpha)


def _map(fn: Callable, tasks: List[tuple], workers: Optional[int] = None) -> list:
    workers = WORKERS if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks, chunksize=chunk))
    return [fn(t) for t in tasks]


def _support_trial(task: tuple) -> Tuple[float, int, str]:
    """One noisy support-recovery run: (aligned squared error, index error, failure)."""
    K, D, sigma, recovery, seed, truth = task
    config = RecoveryConfig.model_validate(recovery)
    try:
        if truth is None:
            X = synthesize_support(K, D, seed=seed).array
        else:
            X = np.asarray(truth, dtype=float).reshape(K, -1)
        noisy = add_difference_noise(difference_set(X), sigma, seed=seed + 1)
        est = recover_support(noisy, K, config, dimension=X.shape[1])
    except SparsePRError as e:
        return math.inf, 1, f"{type(e).__name__}: {e}"
    return l2_error_aligned(X, est), index_based_error(est, X, sigma=sigma), ""


def _failures(results: list, label: str) -> List[str]:
    return [f"{label}, trial {t}: {msg}" for t, (*_, msg) in enumerate(results) if msg]


def _mean_finite(values) -> float:
    arr = np.asarray(list(values), dtype=float)
    arr = arr[np.isfinite(arr)]
    return float(arr.mean()) if arr.size else math.nan


def _crossing(sigmas: Sequence[float], rates: Sequence[float], level: float = 0.5) -> Optional[float]:
    """Log-interpolated σ where the success rate first drops below ``level``."""
    for (s0, r0), (s1, r1) in zip(zip(sigmas, rates), zip(sigmas[1:], rates[1:])):
        if r0 >= level > r1 and s0 > 0:
            w = (r0 - level) / (r0 - r1)
            return float(math.exp(math.log(s0) + w * (math.log(s1) - math.log(s0))))
    return None


def run_phase_transition(spec: ExperimentSpec) -> ResultTable:
    """Empirical vs predicted success rate over (dimension, K, σ).

    The prediction does not depend on the dimension; meta reports the 0.5
    crossings per dimension and their ratio to the predicted one.
    """
    dimensions = spec.dimensions or [spec.dimension]
    cells = [(D, K, s) for D in dimensions for K in spec.k_grid for s in spec.noise_grid]
    recovery = spec.recovery.model_dump()
    tasks = [
        (K, D, s, recovery, trial_seed(spec.seed, c, t), None)
        for c, (D, K, s) in enumerate(cells)
        for t in range(spec.trials)
    ]
    results = _map(_support_trial, tasks)

    table = ResultTable(name=spec.experiment, columns=["dimension", "K", "sigma", "empirical", "theoretical"])
    rates: Dict[Tuple[int, int], List[float]] = {}
    for c, (D, K, s) in enumerate(cells):
        chunk = results[c * spec.trials:(c + 1) * spec.trials]
        empirical = float(np.mean([idx == 0 for _, idx, _ in chunk]))
        theoretical = success_probability(K, s) if K >= 3 else math.nan
        table.rows.append([D, K, s, empirical, theoretical])
        table.warnings.extend(_failures(chunk, f"D={D} K={K} sigma={s}"))
        rates.setdefault((D, K), []).append(empirical)
        log.info(
            "phase-transition D=%d K=%d sigma=%.3g: empirical %.3f, theory %.3f",
            D, K, s, empirical, theoretical,
        )

    sigmas = list(spec.noise_grid)
    theory = {K: transition_sigma(K) for K in spec.k_grid if K >= 3}
    empirical_transition: Dict[str, Dict[str, Optional[float]]] = {}
    ratio: Dict[str, Dict[str, Optional[float]]] = {}
    for (D, K), r in rates.items():
        crossing = _crossing(sigmas, r)
        empirical_transition.setdefault(str(D), {})[str(K)] = crossing
        ratio.setdefault(str(D), {})[str(K)] = (
            crossing / theory[K] if crossing is not None and K in theory else None
        )
    table.meta["empirical_transition"] = empirical_transition
    table.meta["theoretical_transition"] = {str(K): v for K, v in theory.items()}
    table.meta["transition_ratio"] = ratio
    return table

def ablation_configs() -> List[RecoveryConfig]:
    return [
        RecoveryConfig(prune_differences=p, symmetric_cost=s, denoise_partials=d)
        for p, s, d in itertools.product((False, True), repeat=3)
    ]


def run_improvements_ablation(spec: ExperimentSpec) -> ResultTable:
    """All 2³ combinations of pruning, symmetric cost and denoising (no caching).

    Every configuration sees the same instances, so differences are paired.
    """
    K = spec.k_grid[0]
    table = ResultTable(
        name=spec.experiment,
        columns=["config", "sigma", "mean_l2", "mean_index", "failures"],
    )
    for config in ablation_configs():
        recovery = config.model_dump()
        for c, s in enumerate(spec.noise_grid):
            tasks = [(K, 1, s, recovery, trial_seed(spec.seed, c, t), None) for t in range(spec.trials)]
            results = _map(_support_trial, tasks)
            failures = _failures(results, f"{config.label()} sigma={s}")
            mean_l2 = _mean_finite(math.sqrt(sq) for sq, _, _ in results)
            mean_index = float(np.mean([idx for _, idx, _ in results]))
            table.rows.append([config.label(), s, mean_l2, mean_index, len(failures)])
            table.warnings.extend(failures)
            log.info("ablation %s sigma=%.3g: l2 %.4g, index %.3f", config.label(), s, mean_l2, mean_index)
    return table


def on_star_locus(x3: float, x4: float, tol: float) -> bool:
    return (
        abs(x4 - x3) <= tol
        or abs(x4 - x3 - 0.5) <= tol
        or abs(x4 - x3 + 0.5) <= tol
        or abs(x4 - (1 - 2 * x3)) <= tol
    )


def run_star_experiment(spec: ExperimentSpec) -> ResultTable:
    """K = 4 with x1 = 0, x2 = 1 and (x3, x4) on the cell centres of a square grid."""
    n = spec.star_grid
    sigma = spec.noise_grid[0]
    recovery = spec.recovery.model_dump()
    centres = (np.arange(n) + 0.5) / n
    cells = [(float(a), float(b)) for a in centres for b in centres]
    tasks = [
        (4, 1, sigma, recovery, trial_seed(spec.seed, c, t), [0.0, 1.0, x3, x4])
        for c, (x3, x4) in enumerate(cells)
        for t in range(spec.trials)
    ]
    results = _map(_support_trial, tasks)

    table = ResultTable(name=spec.experiment, columns=["x3", "x4", "mean_index", "mean_l2", "on_locus"])
    on, off = [], []
    for c, (x3, x4) in enumerate(cells):
        chunk = results[c * spec.trials:(c + 1) * spec.trials]
        mean_index = float(np.mean([idx for _, idx, _ in chunk]))
        mean_l2 = _mean_finite(math.sqrt(sq) for sq, _, _ in chunk)
        locus = on_star_locus(x3, x4, tol=1.0 / n)
        (on if locus else off).append(mean_index)
        table.rows.append([x3, x4, mean_index, mean_l2, int(locus)])
        table.warnings.extend(_failures(chunk, f"x3={x3} x4={x4}"))
    table.meta["locus_mean_index"] = _mean_finite(on)
    table.meta["off_locus_mean_index"] = _mean_finite(off)
    log.info("star: locus index %.3f, off-locus %.3f", table.meta["locus_mean_index"], table.meta["off_locus_mean_index"])
    return table


def run_caching_benchmark(spec: ExperimentSpec) -> ResultTable:
    """Median wall-clock of uncached vs cached recovery; runs serially."""
    if spec.recovery.denoise_partials:
        raise InvalidArgumentError("caching cannot be benchmarked with denoising enabled")
    plain = spec.recovery.model_copy(update={"use_caching": False})
    cached = spec.recovery.model_copy(update={"use_caching": True})
    sigma = spec.noise_grid[0]

    table = ResultTable(
        name=spec.experiment,
        columns=["K", "uncached_seconds", "cached_seconds", "identical"],
    )
    for c, K in enumerate(spec.k_grid):
        t_plain, t_cached, identical = [], [], True
        for rep in range(spec.repetitions):
            seed = trial_seed(spec.seed, c, rep)
            X = synthesize_support(K, spec.dimension, seed=seed)
            diffs = add_difference_noise(difference_set(X), sigma, seed=seed + 1)
            t0 = time.perf_counter()
            a = recover_support(diffs, K, plain)
            t1 = time.perf_counter()
            b = recover_support(diffs, K, cached)
            t2 = time.perf_counter()
            t_plain.append(t1 - t0)
            t_cached.append(t2 - t1)
            identical &= bool(np.array_equal(a.array, b.array))
        row = [K, float(np.median(t_plain)), float(np.median(t_cached)), int(identical)]
        table.rows.append(row)
        if not identical:
            table.warnings.append(f"K={K}: cached and uncached supports differ")
        log.info("caching K=%d: %.4fs uncached, %.4fs cached", K, row[1], row[2])

    if len(table.rows) >= 2:
        ks = [r[0] for r in table.rows]
        _, alpha_plain = fit_power_law(ks, [r[1] for r in table.rows])
        _, alpha_cached = fit_power_law(ks, [r[2] for r in table.rows])
        table.meta.update(
            uncached_exponent=alpha_plain,
            cached_exponent=alpha_cached,
            exponent_gap=alpha_plain - alpha_cached,
        )
    return table


def _cf_trial(task: tuple) -> Tuple[float, float, List[str]]:
    """One trial of both methods: (FRI squared error, CF squared error, messages)."""
    K, snr_db, recovery, flip, grid, amplitude_kind, seed = task
    messages: List[str] = []
    omega = 2 * math.pi / CF_PERIOD
    M = grid // 2
    kernel = KernelDescriptor(bandwidth=(M + 0.5) * omega)

    X = synthesize_support(K, 1, seed=seed)
    amps = random_amplitudes(K, amplitude_kind, seed=seed + 2)
    samples = acf_fourier_samples(build_acf_atoms(X, amps), kernel, omega, M)
    noisy = add_fourier_noise(samples, snr_db, seed=seed + 1)

    rec = reconstruct(noisy, K, RecoveryConfig.model_validate(recovery))
    messages.extend(rec.flags.get("warnings", []))
    fri_err = l2_error_aligned(X, rec.support) if rec.support is not None else math.inf

    cf_err = math.inf
    try:
        config = FlipConfig.model_validate({**flip, "grid_size": grid, "seed": seed % (2**32)})
        signal = charge_flip(grid_magnitudes(noisy, grid), config)
        cells = extract_support_from_grid(signal, K).array[:, 0]
        cf_err = l2_error_aligned(X, unwrap_circular(cells * CF_PERIOD, CF_PERIOD))
    except SparsePRError as e:
        messages.append(f"Charge Flipping failed: {type(e).__name__}: {e}")
    return fri_err, cf_err, messages


def run_cf_comparison(spec: ExperimentSpec) -> ResultTable:
    """FRI pipeline vs Charge Flipping on noisy DFT coefficients (noise grid is SNR in dB)."""
    K = spec.k_grid[0]
    recovery = spec.recovery.model_dump()
    flip = spec.flip.model_dump()
    table = ResultTable(
        name=spec.experiment,
        columns=["snr_db", "method", "mean_l2", "success_rate"],
    )
    for c, snr in enumerate(spec.noise_grid):
        tasks = [
            (K, snr, recovery, flip, spec.coefficients, spec.amplitudes, trial_seed(spec.seed, c, t))
            for t in range(spec.trials)
        ]
        results = _map(_cf_trial, tasks)
        for t, (_, _, messages) in enumerate(results):
            table.warnings.extend(f"snr={snr}, trial {t}: {m}" for m in messages)
        for method, column in (("fri", 0), ("charge-flipping", 1)):
            errors = [math.sqrt(r[column]) for r in results]
            mean_l2 = _mean_finite(errors)
            rate = success_rate(errors, spec.threshold)
            table.rows.append([snr, method, mean_l2, rate])
            log.info("cf-comparison snr=%s %s: l2 %.4g, success %.3f", snr, method, mean_l2, rate)
    return table


RUNNERS: Dict[str, Callable[[ExperimentSpec], ResultTable]] = {
    "phase-transition": run_phase_transition,
    "ablation": run_improvements_ablation,
    "star": run_star_experiment,
    "caching": run_caching_benchmark,
    "cf-comparison": run_cf_comparison,
}


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    return RUNNERS[spec.experiment](spec)


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    writer.writerows(table.rows)
    return buf.getvalue()


def write_results(table: ResultTable, spec: ExperimentSpec, out: Path) -> Tuple[Path, Path]:
    """Write ``out`` (CSV) and ``out`` with a .json suffix (manifest)."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data = table_to_csv(table).encode("utf-8")
    out.write_bytes(data)
    manifest = {
        "experiment": table.name,
        "spec": spec.model_dump(),
        "columns": table.columns,
        "rows": len(table.rows),
        "content_hash": content_hash(data),
        "meta": table.meta,
        "warnings": table.warnings,
    }
    manifest_path = out.with_suffix(".json")
    manifest_path.write_text(json.dumps(manifest, indent=2, default=str), encoding="utf-8")
    return out, manifest_path
