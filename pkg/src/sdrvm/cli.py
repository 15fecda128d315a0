"""Command-line front end: ``sdrvm <command> [flags]``.

Exit codes: 0 success, 1 runtime failure (or a failed self-check),
2 invalid arguments. Progress goes to stderr, results to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .core import FitOptions
from .experiments.instances import CsConfig
from .experiments.methods import METHODS

DEFAULT_SEED = 7


class ArgError(Exception):
    pass


def parse_range(text: str) -> tuple:
    """``start:stop:step`` inclusive of stop, every value in (0, 1]."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            vals = [float(parts[0])]
        elif len(parts) == 3:
            start, stop, step = map(float, parts)
            if step <= 0 or stop < start:
                raise ArgError(f"bad range {text!r}: need start <= stop and step > 0")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            vals = [round(start + i * step, 10) for i in range(count)]
        else:
            raise ArgError(f"bad range {text!r}: expected start:stop:step")
    except ValueError:
        raise ArgError(f"bad range {text!r}: not numeric") from None
    for v in vals:
        if not 0 < v <= 1:
            raise ArgError(f"measurement rate {v} in {text!r} is outside (0, 1]")
    return tuple(vals)


def parse_trials(text: str) -> tuple:
    """``MxS`` matrices times signals, or a single count used for both."""
    try:
        parts = [int(p) for p in text.lower().split("x")]
    except ValueError:
        raise ArgError(f"bad trial spec {text!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or min(parts) < 1:
        raise ArgError(f"bad trial spec {text!r}: expected MxS with positive counts")
    return tuple(parts)


def parse_methods(text: str, allowed) -> tuple:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [n for n in names if n not in allowed]
    if bad or not names:
        raise ArgError(f"unknown method(s) {bad}; choose from {sorted(allowed)}")
    return names


def _emit(table, args):
    fmt = args.format
    text = table.to_json() if fmt == "json" else table.to_csv()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {args.out}", file=sys.stderr)


def _opts(args):
    return FitOptions(max_iter=args.max_iter, rel_tol=args.rel_tol)


def cmd_cs_sweep(args):
    from .experiments.sweeps import run_cs_sweep
    mats, sigs = parse_trials(args.trials)
    cfg = CsConfig(n=args.n, m=args.n, k_signal=args.k, sdnr_db=args.sdnr_db,
                   trials_matrices=mats, trials_signals=sigs, seed=args.seed,
                   methods=parse_methods(args.methods, METHODS),
                   mn_grid=parse_range(args.mn),
                   outlier_fraction=args.outliers)
    _emit(run_cs_sweep(cfg, _opts(args), args.jobs, args.timings, True), args)
    return 0


def cmd_block_sweep(args):
    from .experiments.sweeps import block_config, run_block_sweep
    mats, sigs = parse_trials(args.trials)
    cfg = block_config(n=args.n, m=args.n, k_signal=args.k_blocks,
                       block_size=args.block_size, structure=args.structure,
                       sdnr_db=args.sdnr_db, trials_matrices=mats,
                       trials_signals=sigs, seed=args.seed,
                       methods=parse_methods(args.methods, METHODS),
                       mn_grid=parse_range(args.mn),
                       outlier_fraction=args.outliers)
    _emit(run_block_sweep(cfg, _opts(args), args.jobs, args.timings, True), args)
    return 0


def cmd_housing(args):
    from .experiments.housing import load_housing, run_housing
    if not 0 < args.rho < 1:
        raise ArgError("--rho must lie in (0, 1)")
    data = load_housing(args.csv)
    table = run_housing(data, args.rho, args.trials, args.seed,
                        parse_methods(args.methods, METHODS), _opts(args),
                        timings=args.timings, progress=True)
    _emit(table, args)
    return 0


def cmd_denoise(args):
    from .experiments.images import (denoise_image, psnr, read_pgm,
                                     salt_pepper, write_pgm, PatchModel)
    parse_methods(args.method, tuple(METHODS) + ("median",))
    if not 0 <= args.rho <= 1:
        raise ArgError("--rho must lie in [0, 1]")
    img = read_pgm(args.input)
    noisy = salt_pepper(img, args.rho, args.seed) if args.rho > 0 else img
    model = PatchModel(args.patch, args.radius, args.degree)
    out = denoise_image(noisy, args.method, model, _opts(args), progress=True)
    write_pgm(out, args.out)
    print(f"wrote {args.out}", file=sys.stderr)
    if args.ref:
        ref = read_pgm(args.ref)
        print(f"psnr_db {psnr(ref, out):.4f} method {args.method} rho {args.rho:g}")
    return 0


def cmd_selfcheck(args):
    from .identities import run_identity_suite
    results = run_identity_suite(args.trials, args.seed, args.perturb)
    failed = None
    for r in results:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.name:22s} max_err {r.max_error:.3e} tol {r.tolerance:.0e} "
              f"trials {r.trials} {status}")
        if not r.passed and failed is None:
            failed = r.name
    if failed:
        print(f"identity check failed: {failed}", file=sys.stderr)
        return 1
    return 0


def _common(p, seed=DEFAULT_SEED):
    p.add_argument("--seed", type=int, default=seed, help="root RNG seed (default %(default)s)")
    p.add_argument("--out", default=None, help="output path, stdout if omitted")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="table format (default %(default)s)")
    p.add_argument("--max-iter", type=int, default=1000, help="(default %(default)s)")
    p.add_argument("--rel-tol", type=float, default=1e-4, help="(default %(default)s)")
    p.add_argument("--timings", action="store_true",
                   help="add wall-clock rows (output no longer byte-reproducible)")


def build_parser():
    ap = argparse.ArgumentParser(prog="sdrvm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cs-sweep", help="NMSE vs m/n for sparse signals")
    p.add_argument("--n", type=int, default=100, help="(default %(default)s)")
    p.add_argument("--k", type=int, default=10, help="signal sparsity (default %(default)s)")
    p.add_argument("--mn", default="0.3:0.9:0.1", help="m/n range start:stop:step (default %(default)s)")
    p.add_argument("--outliers", type=float, default=0.05, help="outlier fraction of m (default %(default)s)")
    p.add_argument("--sdnr-db", type=float, default=20.0, help="(default %(default)s)")
    p.add_argument("--trials", default="20x20", help="matrices x signals (default %(default)s)")
    p.add_argument("--methods", default="rvm,rbrvm,sdrvm,sdrvm-sd", help="(default %(default)s)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default %(default)s)")
    _common(p)
    p.set_defaults(func=cmd_cs_sweep)

    p = sub.add_parser("block-sweep", help="NMSE vs m/n for block-sparse signals")
    p.add_argument("--n", type=int, default=100, help="(default %(default)s)")
    p.add_argument("--block-size", type=int, default=5, help="(default %(default)s)")
    p.add_argument("--k-blocks", type=int, default=3, help="active signal blocks (default %(default)s)")
    p.add_argument("--structure", choices=("known", "unknown"), default="known",
                   help="(default %(default)s)")
    p.add_argument("--mn", default="0.3:0.9:0.1", help="(default %(default)s)")
    p.add_argument("--outliers", type=float, default=0.05,
                   help="fraction of noise blocks active (default %(default)s)")
    p.add_argument("--sdnr-db", type=float, default=20.0, help="(default %(default)s)")
    p.add_argument("--trials", default="20x20", help="(default %(default)s)")
    p.add_argument("--methods", default="rvm,rbrvm,sdrvm,sdrvm-sd,sdrvm-block,sdrvm-overlap",
                   help="(default %(default)s)")
    p.add_argument("--jobs", type=int, default=1, help="(default %(default)s)")
    _common(p)
    p.set_defaults(func=cmd_block_sweep)

    p = sub.add_parser("housing", help="median house-price prediction error")
    p.add_argument("--csv", required=True, help="14-column housing CSV")
    p.add_argument("--rho", type=float, default=0.5, help="training fraction (default %(default)s)")
    p.add_argument("--trials", type=int, default=100, help="(default %(default)s)")
    p.add_argument("--methods", default="rvm,rbrvm,sdrvm-sd", help="(default %(default)s)")
    _common(p, seed=3)
    p.set_defaults(func=cmd_housing)

    p = sub.add_parser("denoise", help="salt-and-pepper corruption and denoising")
    p.add_argument("--in", dest="input", required=True, help="input PGM")
    p.add_argument("--out", required=True, help="output PGM (P5)")
    p.add_argument("--rho", type=float, default=0.2, help="corrupted fraction (default %(default)s)")
    p.add_argument("--method", default="sdrvm-sd", help="solver or 'median' (default %(default)s)")
    p.add_argument("--ref", default=None, help="clean reference PGM; prints PSNR")
    p.add_argument("--patch", type=int, default=5, help="(default %(default)s)")
    p.add_argument("--radius", type=float, default=2.1, help="(default %(default)s)")
    p.add_argument("--degree", type=int, default=1, help="(default %(default)s)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="(default %(default)s)")
    p.add_argument("--max-iter", type=int, default=1000, help="(default %(default)s)")
    p.add_argument("--rel-tol", type=float, default=1e-4, help="(default %(default)s)")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("selfcheck", help="numerical identity checks")
    p.add_argument("--trials", type=int, default=200, help="(default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="(default %(default)s)")
    p.add_argument("--perturb", default=None,
                   help="test hook: break the named identity on purpose")
    p.set_defaults(func=cmd_selfcheck)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "perturb", None):
            from .identities import CHECKS
            if args.perturb not in CHECKS:
                raise ArgError(f"unknown identity {args.perturb!r}")
        return args.func(args)
    except ArgError as exc:
        parser.print_usage(sys.stderr)
        print(f"sdrvm {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"sdrvm {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
