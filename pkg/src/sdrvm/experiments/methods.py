"""Uniform calling convention over every solver used by the harnesses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..baselines import fit_rbrvm, fit_rvm
from ..blocks import (fit_sdrvm_blocks, fit_sdrvm_overlap,
                      fit_sdrvm_sparse_dense, sparse_dense_noise_layout)
from ..core import BlockLayout, FitOptions, HyperPriors, LinearSystem
from ..solver import fit_sdrvm


@dataclass(frozen=True)
class MethodResult:
    x_hat: np.ndarray
    iterations: int
    seconds: float
    iteration_seconds: tuple


def _pack(x_hat, report):
    return MethodResult(np.asarray(x_hat), report.iterations,
                        report.elapsed_seconds, tuple(report.iteration_seconds))


def _rvm(system, opts, priors, block_size):
    post, report = fit_rvm(system, priors, opts)
    return _pack(post.x_hat, report)


def _rbrvm(system, opts, priors, block_size):
    aug, report = fit_rbrvm(system, priors, opts)
    return _pack(aug.x_hat, report)


def _sdrvm(system, opts, priors, block_size):
    post, _, report = fit_sdrvm(system, priors, opts)
    return _pack(post.x_hat, report)


def _sparse_dense(system, opts, priors, block_size):
    post, _, report = fit_sdrvm_sparse_dense(system, priors, opts)
    return _pack(post.x_hat, report)


def _known_blocks(system, opts, priors, block_size):
    post, _, report = fit_sdrvm_blocks(
        system, BlockLayout.contiguous(system.n, block_size),
        BlockLayout.contiguous(system.m, block_size), priors, opts)
    return _pack(post.x_hat, report)


def overlap_noise_layout(m, block_size):
    """Sliding noise windows plus one block over every measurement."""
    win = BlockLayout.windows(m, block_size)
    dense = sparse_dense_noise_layout(m).blocks[-1]
    return BlockLayout(win.blocks + (dense,), m, "overlapping")


def _overlap(system, opts, priors, block_size):
    post, _, report = fit_sdrvm_overlap(
        system, BlockLayout.windows(system.n, block_size),
        overlap_noise_layout(system.m, block_size), priors, opts)
    return _pack(post.x_hat, report)


METHODS = {
    "rvm": _rvm,
    "rbrvm": _rbrvm,
    "sdrvm": _sdrvm,
    "sdrvm-sd": _sparse_dense,
    "sdrvm-block": _known_blocks,
    "sdrvm-overlap": _overlap,
}


def run_method(name: str, system: LinearSystem, opts: FitOptions = FitOptions(),
               priors: HyperPriors = HyperPriors(), block_size: int = 5):
    try:
        fn = METHODS[name]
    except KeyError:
        raise ValueError(
            f"unknown method {name!r}; choose from {sorted(METHODS)}") from None
    return fn(system, opts, priors, block_size)
