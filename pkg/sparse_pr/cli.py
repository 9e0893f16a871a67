from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .amplitudes import assemble_weight_matrix, recover_amplitudes
from .charge_flipping import charge_flip, extract_support_from_grid, grid_magnitudes
from .errors import InvalidArgumentError, SparsePRError
from .experiments import EXPERIMENT_DEFAULTS, load_spec, run_experiment, table_to_csv, write_results
from .fri import superresolve_acf
from .models import Bundle, FlipConfig, KernelDescriptor, RecoveryConfig, ResultTable, Support
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
from .theory import theory_surface

LOG_LEVEL = os.getenv("SPR_LOG_LEVEL", "INFO").upper()

log = logging.getLogger("sparse_pr")


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    log.info("wrote %s", out)


def _read_bundle(path: Optional[Path]) -> Bundle:
    if path is None:
        raise InvalidArgumentError("this command needs --in <bundle.json> (see `spr synth`)")
    return Bundle.model_validate_json(Path(path).read_text(encoding="utf-8"))


def _recovery_config(args) -> RecoveryConfig:
    return RecoveryConfig(
        use_caching=args.cache,
        prune_differences=args.prune,
        symmetric_cost=args.symmetric,
        denoise_partials=args.denoise,
    )


def _bundle_K(bundle: Bundle, K: Optional[int]) -> int:
    if K is not None:
        return K
    if bundle.support is not None:
        return bundle.support.K
    if bundle.differences is not None:
        return bundle.differences.K
    raise InvalidArgumentError("cannot infer K from the bundle; pass --K")


def cmd_synth(args) -> int:
    support = synthesize_support(args.K, args.dim, seed=args.seed)
    amps = random_amplitudes(args.K, args.amplitudes, seed=args.seed + 2)
    atoms = build_acf_atoms(support, amps)
    diffs = add_difference_noise(difference_set(support), args.sigma, seed=args.seed + 1)
    bundle = Bundle(support=support, amplitudes=amps, atoms=atoms, differences=diffs)
    if args.dim == 1:
        omega = args.omega
        M = args.M
        kernel = KernelDescriptor(bandwidth=((M if M is not None else 2 * atoms.size) + 0.5) * omega)
        samples = acf_fourier_samples(atoms, kernel, omega, M)
        bundle.samples = add_fourier_noise(samples, args.snr, seed=args.seed + 3)
    _emit(bundle.model_dump_json(indent=2), args.out)
    return 0


def cmd_superresolve(args) -> int:
    bundle = _read_bundle(args.input)
    if bundle.samples is None:
        raise InvalidArgumentError("bundle has no Fourier samples")
    bundle.atoms = superresolve_acf(bundle.samples, _bundle_K(bundle, args.K), method=args.method)
    bundle.differences = bundle.atoms.to_difference_set()
    _emit(bundle.model_dump_json(indent=2), args.out)
    return 0


def cmd_recover(args) -> int:
    bundle = _read_bundle(args.input)
    diffs = bundle.differences or (bundle.atoms.to_difference_set() if bundle.atoms else None)
    if diffs is None:
        raise InvalidArgumentError("bundle has neither differences nor ACF atoms")
    K = args.K if args.K is not None else diffs.K
    bundle.support = recover_support(diffs, K, _recovery_config(args), dimension=diffs.dimension)
    _emit(bundle.model_dump_json(indent=2), args.out)
    return 0


def cmd_amplitudes(args) -> int:
    bundle = _read_bundle(args.input)
    if bundle.atoms is None or bundle.support is None:
        raise InvalidArgumentError("amplitude recovery needs ACF atoms and a support")
    W = assemble_weight_matrix(bundle.atoms, bundle.support, tolerance=args.tolerance)
    bundle.amplitudes = recover_amplitudes(W)
    _emit(bundle.model_dump_json(indent=2), args.out)
    return 0


def cmd_theory(args) -> int:
    sigmas = args.sigma or np.logspace(-4, -1, 13).tolist()
    rows = [list(r) for r in theory_surface(args.K, sigmas)]
    table = ResultTable(name="theory", columns=["K", "sigma", "p"], rows=rows)
    _emit(table_to_csv(table), args.out)
    return 0


def cmd_cf(args) -> int:
    bundle = _read_bundle(args.input)
    if bundle.samples is None:
        raise InvalidArgumentError("bundle has no Fourier samples")
    config = FlipConfig(
        grid_size=args.grid,
        b=args.b,
        delta_decay=args.decay,
        restarts=args.restarts,
        max_iters=args.max_iters,
        seed=args.seed,
        blur=args.blur,
    )
    signal = charge_flip(grid_magnitudes(bundle.samples, config.grid_size), config)
    K = _bundle_K(bundle, args.K)
    cells = extract_support_from_grid(signal, K)
    period = 2 * math.pi / bundle.samples.sampling_step
    bundle.support = Support.from_array(cells.array * period)
    _emit(bundle.model_dump_json(indent=2), args.out)
    return 0


def cmd_experiment(args) -> int:
    spec = load_spec(
        args.id,
        args.config,
        seed=args.seed,
        trials=args.trials,
    )
    table = run_experiment(spec)
    out = args.out or spec.out
    if out is None:
        sys.stdout.write(table_to_csv(table))
    else:
        csv_path, manifest = write_results(table, spec, Path(out))
        log.info("wrote %s and %s", csv_path, manifest)
    for w in table.warnings:
        log.warning(w)
    return 0


def _add_recovery_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cache", action="store_true", help="Cache per-pair minima between iterations")
    p.add_argument("--prune", action="store_true", help="Remove used differences after each acceptance")
    p.add_argument("--symmetric", action="store_true", help="Use the symmetric cost")
    p.add_argument("--denoise", action="store_true", help="Denoise partial solutions")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spr", description="Super-resolution phase retrieval for sparse signals.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="Synthesize a support, its ACF and noisy measurements")
    s.add_argument("--K", type=int, default=5)
    s.add_argument("--dim", type=int, default=1, choices=(1, 2))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--amplitudes", choices=("unit", "uniform"), default="unit")
    s.add_argument("--sigma", type=float, default=0.0, help="Noise std on the differences")
    s.add_argument("--snr", type=float, default=math.inf, help="SNR in dB on the Fourier samples")
    s.add_argument("--omega", type=float, default=math.pi / 2, help="Fourier sampling step")
    s.add_argument("--M", type=int, default=None, help="Samples for m = -M..M (default 2N)")
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("superresolve", help="Recover the continuous ACF from Fourier samples")
    s.add_argument("--in", dest="input", type=Path)
    s.add_argument("--K", type=int)
    s.add_argument("--method", choices=("subspace", "prony"), default="subspace", help="Root finder")
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_superresolve)

    s = sub.add_parser("recover", help="Greedy support recovery from the difference set")
    s.add_argument("--in", dest="input", type=Path)
    s.add_argument("--K", type=int)
    _add_recovery_flags(s)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("amplitudes", help="Recover amplitudes from ACF atoms and a support")
    s.add_argument("--in", dest="input", type=Path)
    s.add_argument("--tolerance", type=float, default=None)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_amplitudes)

    s = sub.add_parser("theory", help="Predicted success probability surface as CSV")
    s.add_argument("--K", type=int, nargs="+", default=[5, 8, 12])
    s.add_argument("--sigma", type=float, nargs="+")
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_theory)

    s = sub.add_parser("cf", help="Charge Flipping baseline on the Fourier samples")
    s.add_argument("--in", dest="input", type=Path)
    s.add_argument("--K", type=int)
    s.add_argument("--grid", type=int, default=200)
    s.add_argument("--b", type=float, default=1.1)
    s.add_argument("--decay", type=float, default=0.99)
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--max-iters", dest="max_iters", type=int, default=5000)
    s.add_argument("--blur", type=float, default=1.0, help="Gaussian blur of the magnitudes in cells (0: off)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_cf)

    s = sub.add_parser("experiment", help="Run one of the experiment drivers")
    s.add_argument("id", choices=sorted(EXPERIMENT_DEFAULTS))
    s.add_argument("--config", type=Path, help="JSON file overriding the experiment defaults")
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--out", type=Path, help="CSV path; the manifest goes next to it as .json")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SparsePRError, ValueError) as e:
        log.error("%s: %s", type(e).__name__, e)
        return 2
