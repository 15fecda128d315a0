"""Monte-Carlo recovery sweeps over the measurement rate m/n.

Every (rate, matrix) pair gets its own child of one SeedSequence, so the
table does not depend on how trials are spread over worker processes.
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from ..core import FitOptions
from .instances import CsConfig, gaussian_matrix, gen_cs_instance, nmse
from .methods import run_method
from .tables import ResultTable

HIST_EDGES = tuple(10.0 ** e for e in np.arange(-4.0, 2.01, 0.5))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def point_config(cfg: CsConfig, rate: float) -> CsConfig:
    """Concrete config at one measurement rate: m and the outlier count."""
    m = max(1, round_half_up(rate * cfg.n))
    k_noise = min(cfg.k_noise, m)
    if cfg.outlier_fraction is not None:
        if cfg.block_size:
            q = math.ceil(m / cfg.block_size)
            k_noise = round_half_up(cfg.outlier_fraction * q)
            if cfg.outlier_fraction > 0:
                k_noise = max(1, k_noise)
            k_noise = min(k_noise, q if cfg.structure == "known" else m)
        else:
            k_noise = round_half_up(cfg.outlier_fraction * m)
    return replace(cfg, m=m, k_noise=k_noise)


def _one_matrix(args):
    cfg, methods, opts, seq = args
    rng = np.random.default_rng(seq)
    A = gaussian_matrix(rng, cfg.m, cfg.n)
    out = {name: [] for name in methods}
    for child in seq.spawn(cfg.trials_signals):
        system, x, _ = gen_cs_instance(cfg, child, A=A)
        for name in methods:
            res = run_method(name, system, opts, block_size=cfg.block_size or 5)
            out[name].append((x, res.x_hat, res.iterations, res.seconds,
                              res.iteration_seconds))
    return out


def _summarise(table, rate, name, runs, seed, timings):
    trials = len(runs)
    truths = [r[0] for r in runs]
    ests = [r[1] for r in runs]
    try:
        value = nmse(truths, ests)
    except ZeroDivisionError:
        # no signal at all: exact zero estimates get the sentinel
        err = sum(float(np.sum(e ** 2)) for e in ests)
        value = -math.inf if err == 0 else math.nan
        table.add(rate, name, "error_energy", err / trials, trials, seed)
    table.add(rate, name, "nmse_db", value, trials, seed)
    table.add(rate, name, "iterations_mean",
              float(np.mean([r[2] for r in runs])), trials, seed)
    if timings:
        secs = np.array([r[3] for r in runs])
        per_it = np.concatenate([np.asarray(r[4]) for r in runs])
        table.add(rate, name, "seconds_mean", float(secs.mean()), trials, seed)
        table.add(rate, name, "seconds_median", float(np.median(secs)), trials, seed)
        table.add(rate, name, "iteration_seconds_median",
                  float(np.median(per_it)), trials, seed)
        counts, _ = np.histogram(secs, bins=HIST_EDGES)
        for lo, hi, c in zip(HIST_EDGES[:-1], HIST_EDGES[1:], counts):
            table.add(rate, name, f"seconds_hist[{lo:.3g},{hi:.3g})", c,
                      trials, seed)


def _sweep(cfg, opts, jobs, timings, progress, label):
    table = ResultTable(meta={"kind": label, "n": cfg.n,
                              "k_signal": cfg.k_signal,
                              "sdnr_db": cfg.sdnr_db,
                              "outlier_fraction": cfg.outlier_fraction,
                              "block_size": cfg.block_size,
                              "structure": cfg.structure,
                              "trials_matrices": cfg.trials_matrices,
                              "trials_signals": cfg.trials_signals,
                              "seed": cfg.seed})
    root = np.random.SeedSequence(cfg.seed)
    point_seqs = root.spawn(len(cfg.mn_grid))
    for rate, pseq in zip(cfg.mn_grid, point_seqs):
        pcfg = point_config(cfg, rate)
        work = [(pcfg, tuple(cfg.methods), opts, s)
                for s in pseq.spawn(cfg.trials_matrices)]
        if jobs and jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(_one_matrix, work))
        else:
            parts = [_one_matrix(w) for w in work]
        for name in cfg.methods:
            runs = [r for part in parts for r in part[name]]
            _summarise(table, float(rate), name, runs, cfg.seed, timings)
        if progress:
            print(f"[{label}] m/n={rate:g} (m={pcfg.m}, outliers={pcfg.k_noise}) done",
                  file=sys.stderr)
    return table


def run_cs_sweep(cfg: CsConfig, opts: FitOptions = FitOptions(), jobs: int = 1,
                 timings: bool = False, progress: bool = False) -> ResultTable:
    """NMSE (dB) and iteration counts per (m/n, method).

    Timing rows are only emitted with ``timings=True`` so that default
    output is byte-reproducible.
    """
    if cfg.block_size:
        raise ValueError("use run_block_sweep for block-sparse configs")
    return _sweep(cfg, opts, jobs, timings, progress, "cs")


def run_block_sweep(cfg: CsConfig, opts: FitOptions = FitOptions(),
                    jobs: int = 1, timings: bool = False,
                    progress: bool = False) -> ResultTable:
    """Block-sparse signal and block outliers; ``cfg.structure`` picks the arm."""
    if not cfg.block_size:
        raise ValueError("block sweep needs cfg.block_size")
    return _sweep(cfg, opts, jobs, timings, progress, f"block-{cfg.structure}")


def block_config(**kw) -> CsConfig:
    """Defaults for the block experiment: 20 blocks of 5, 3 active."""
    base = dict(n=100, m=50, k_signal=3, block_size=5, outlier_fraction=0.05,
                methods=("rvm", "rbrvm", "sdrvm", "sdrvm-sd", "sdrvm-block",
                         "sdrvm-overlap"))
    base.update(kw)
    return CsConfig(**base)
