"""Random compressed-sensing instances and recovery metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import LinearSystem

# nmse of an exact recovery, in dB
NMSE_FLOOR_DB = -math.inf


@dataclass(frozen=True)
class CsConfig:
    """Parameters of a recovery sweep.

    ``k_signal``/``k_noise`` count nonzero coordinates, or nonzero blocks
    when ``block_size`` is set. ``outlier_fraction`` overrides ``k_noise``
    with ``round(fraction * m)`` (or of the noise block count) per point.
    """

    n: int = 100
    m: int = 70
    k_signal: int = 10
    k_noise: int = 0
    sdnr_db: float = 20.0
    trials_matrices: int = 20
    trials_signals: int = 20
    seed: int = 7
    methods: tuple = ("rvm", "rbrvm", "sdrvm", "sdrvm-sd")
    mn_grid: tuple = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    outlier_fraction: float = None
    block_size: int = None
    structure: str = "known"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if not 0 <= self.k_signal <= self.n:
            raise ValueError("k_signal must lie in [0, n]")
        if not 0 <= self.k_noise <= self.m:
            raise ValueError("k_noise must lie in [0, m]")
        if not math.isfinite(self.sdnr_db):
            raise ValueError("sdnr_db must be finite")
        if self.trials_matrices < 1 or self.trials_signals < 1:
            raise ValueError("trial counts must be positive")
        if self.structure not in ("known", "unknown"):
            raise ValueError("structure is 'known' or 'unknown'")
        for r in self.mn_grid:
            if not 0 < r <= 1:
                raise ValueError(f"measurement rate {r} outside (0, 1]")


def noise_variance(k_signal: int, m: int, sdnr_db: float) -> float:
    """Dense-noise variance giving the requested SDNR for unit-norm columns."""
    return k_signal / (m * 10.0 ** (sdnr_db / 10.0))


def gaussian_matrix(rng, m, n):
    A = rng.standard_normal((m, n))
    return A / np.linalg.norm(A, axis=0)


def sparse_vector(rng, size, k):
    v = np.zeros(size)
    if k:
        v[rng.choice(size, k, replace=False)] = rng.standard_normal(k)
    return v


def block_vector(rng, size, block_size, k_blocks, structure="known"):
    """``k_blocks`` active runs of ``block_size`` N(0,1) entries.

    Known structure draws distinct blocks of the fixed partition; unknown
    structure draws block starts uniformly, so blocks may overlap.
    """
    v = np.zeros(size)
    if k_blocks == 0:
        return v
    if structure == "known":
        n_blocks = int(math.ceil(size / block_size))
        for b in rng.choice(n_blocks, k_blocks, replace=False):
            idx = np.arange(b * block_size, min((b + 1) * block_size, size))
            v[idx] = rng.standard_normal(idx.size)
    else:
        for s in rng.integers(0, size - block_size + 1, k_blocks):
            v[s:s + block_size] = rng.standard_normal(block_size)
    return v


def gen_cs_instance(cfg: CsConfig, seed, A=None):
    """Draw ``(system, x_true, e_true)``; deterministic in ``seed``.

    ``seed`` may be an int, a SeedSequence or a Generator. Passing ``A``
    reuses a measurement matrix so several signals share one matrix.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m, n = cfg.m, cfg.n
    if A is None:
        A = gaussian_matrix(rng, m, n)
    if cfg.block_size:
        x = block_vector(rng, n, cfg.block_size, cfg.k_signal, cfg.structure)
        e = block_vector(rng, m, cfg.block_size, cfg.k_noise, cfg.structure)
        k_nonzero = int(np.count_nonzero(x))
    else:
        x = sparse_vector(rng, n, cfg.k_signal)
        e = sparse_vector(rng, m, cfg.k_noise)
        k_nonzero = cfg.k_signal
    sigma2 = noise_variance(k_nonzero, m, cfg.sdnr_db)
    noise = rng.normal(0.0, math.sqrt(sigma2), m)
    return LinearSystem(A, A @ x + e + noise), x, e


def nmse(x_true_set, x_hat_set) -> float:
    """Normalised mean square error over a set of trials, in dB.

    Exact recovery returns ``-inf``.
    """
    num = 0.0
    den = 0.0
    pairs = list(zip(x_true_set, x_hat_set))
    if not pairs:
        raise ValueError("nmse needs at least one trial")
    for x, xh in pairs:
        x = np.asarray(x, dtype=float)
        num += float(np.sum((x - np.asarray(xh, dtype=float)) ** 2))
        den += float(np.sum(x ** 2))
    if den == 0:
        raise ZeroDivisionError("all true signals are zero")
    if num == 0:
        return NMSE_FLOOR_DB
    return 10.0 * math.log10(num / den)


def sdnr_db(A, x, noise) -> float:
    return 10.0 * math.log10(float(np.sum((A @ x) ** 2)) / float(np.sum(noise ** 2)))
