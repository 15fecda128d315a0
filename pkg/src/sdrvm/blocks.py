"""Block-structured SD-RVM.

Known structure: one shared precision per block of a disjoint partition of
the signal and of the measurements. Unknown structure: every coordinate's
variance is the sum of the variances of the (possibly overlapping) blocks
covering it, and the per-block precisions are re-estimated.
"""

from __future__ import annotations

import time

import numpy as np

from .core import (BlockLayout, FitOptions, FitReport, HyperPriors,
                   InvalidBlockLayout, LinearSystem, PrecisionState, validate)
from .solver import (_reestimate, initial_state, log_evidence, max_log_change,
                     posterior, projected_variance)


def _require(layout, size, kind, what):
    if layout.size != size:
        raise InvalidBlockLayout(
            f"{what} layout covers {layout.size} positions, expected {size}")
    if kind == "disjoint" and layout.kind != "disjoint":
        raise InvalidBlockLayout(f"{what} layout must be a disjoint partition")


def block_gamma_update(state, post, labels, sizes, priors, opts):
    """Per-block signal precisions from a frozen posterior (disjoint blocks)."""
    tg = np.array(state.tilde_gamma, dtype=float)
    live = np.isfinite(tg)
    p = len(tg)
    trace = np.bincount(labels, weights=post.sigma_diag(), minlength=p)
    sq = np.bincount(labels, weights=post.x_hat ** 2, minlength=p)
    num = sizes[live] - tg[live] * trace[live] + 2.0 * priors.a
    tg[live] = _reestimate(num, sq[live], priors.b, opts)
    return tg


def block_beta_update(system, state, post, labels, sizes, priors, opts):
    tb = np.array(state.tilde_beta, dtype=float)
    live = np.isfinite(tb)
    q = len(tb)
    resid = system.y - system.A @ post.x_hat
    trace = np.bincount(labels, weights=projected_variance(system.A, post),
                        minlength=q)
    sq = np.bincount(labels, weights=resid ** 2, minlength=q)
    num = sizes[live] - tb[live] * trace[live] + 2.0 * priors.c
    tb[live] = _reestimate(num, sq[live], priors.d, opts)
    return tb


def _run(system, state, step, expand, priors, opts, callback):
    t0 = time.perf_counter()
    cap = opts.prune_threshold
    report = FitReport()
    for it in range(int(opts.max_iter)):
        ti = time.perf_counter()
        post = posterior(system, state, cap)
        report.evidence_trace.append(log_evidence(system, state, post, priors, cap))
        if callback is not None:
            callback(it, state, post)
        tg, tb = step(state, post)
        change = max(max_log_change(state.tilde_gamma, tg),
                     max_log_change(state.tilde_beta, tb))
        state = expand(tg, tb)
        report.iterations = it + 1
        report.iteration_seconds.append(time.perf_counter() - ti)
        if change < opts.rel_tol or not np.any(np.isfinite(state.gamma)):
            report.converged = True
            break
    post = posterior(system, state, cap)
    report.active_signal_set = state.active_signal
    report.active_noise_set = state.active_noise
    report.elapsed_seconds = time.perf_counter() - t0
    return post, state, report


def fit_sdrvm_blocks(system: LinearSystem, signal_layout: BlockLayout,
                     noise_layout: BlockLayout,
                     priors: HyperPriors = HyperPriors(),
                     opts: FitOptions = FitOptions(), callback=None):
    """SD-RVM with one precision per block of known disjoint partitions.

    Blocks are pruned as wholes. With singleton layouts the trajectory is
    bit-identical to :func:`sdrvm.solver.fit_sdrvm`.
    """
    _require(signal_layout, system.n, "disjoint", "signal")
    _require(noise_layout, system.m, "disjoint", "noise")
    validate(system, signal_layout, None, noise_layout)
    glab, blab = signal_layout.labels(), noise_layout.labels()
    gsz, bsz = signal_layout.sizes, noise_layout.sizes
    base = initial_state(system)

    def expand(tg, tb):
        return PrecisionState(tg[glab], tb[blab], tg, tb)

    state = expand(np.ones(len(signal_layout)),
                   np.full(len(noise_layout), base.beta[0]))

    def step(state, post):
        return (block_gamma_update(state, post, glab, gsz, priors, opts),
                block_beta_update(system, state, post, blab, bsz, priors, opts))

    return _run(system, state, step, expand, priors, opts, callback)


def combine_precisions(incidence: np.ndarray, tilde) -> np.ndarray:
    """Componentwise precision: inverse of summed covering block variances.

    Pruned blocks (inf) contribute zero variance; a coordinate with no live
    covering block comes out as inf.
    """
    tilde = np.asarray(tilde, dtype=float)
    var = np.zeros_like(tilde)
    live = np.isfinite(tilde)
    var[live] = 1.0 / tilde[live]
    total = incidence.T @ var
    with np.errstate(divide="ignore"):
        return np.where(total > 0, 1.0 / total, np.inf)


def overlap_gamma_update(state, post, G, priors, opts):
    """Underlying signal block precisions for an overlapping cover ``G``.

    ``G`` is the block/position incidence matrix. With
    ``Gamma_k = diag(gamma * 1[i in I_k])`` the update reads
    ``(tr(Gamma_k) - tr(Gamma_k Sigma Gamma_k) + 2a tg) / tg`` over
    ``||Gamma_k x||^2 / tg^2 + 2b``.
    """
    tg = np.array(state.tilde_gamma, dtype=float)
    live = np.isfinite(tg)
    g = np.where(np.isfinite(state.gamma), state.gamma, 0.0)
    Gl = G[live]
    tr_g = Gl @ g
    tr_gsg = Gl @ (g ** 2 * post.sigma_diag())
    sq = Gl @ (g ** 2 * post.x_hat ** 2)
    t = tg[live]
    num = tr_g / t - tr_gsg / t + 2.0 * priors.a
    tg[live] = _reestimate(num, sq / t ** 2, priors.b, opts)
    return tg


def overlap_beta_update(system, state, post, J, priors, opts):
    """Underlying noise block precisions; uses ``diag(A Sigma A^T)``."""
    tb = np.array(state.tilde_beta, dtype=float)
    live = np.isfinite(tb)
    cap = opts.prune_threshold
    b = np.where(np.isfinite(state.beta), state.beta, cap)
    resid = system.y - system.A @ post.x_hat
    Jl = J[live]
    tr_b = Jl @ b
    tr_bsb = Jl @ (b ** 2 * projected_variance(system.A, post))
    sq = Jl @ (b ** 2 * resid ** 2)
    t = tb[live]
    num = tr_b / t - tr_bsb / t + 2.0 * priors.c
    tb[live] = _reestimate(num, sq / t ** 2, priors.d, opts)
    return tb


def initial_overlap_precisions(layout: BlockLayout, base: float) -> np.ndarray:
    """Each block starts at ``base`` times the deepest coverage inside it."""
    cover = layout.coverage()
    return np.array([base * cover[b].max() for b in layout.blocks])


def fit_sdrvm_overlap(system: LinearSystem, signal_blocks: BlockLayout,
                      noise_blocks: BlockLayout,
                      priors: HyperPriors = HyperPriors(),
                      opts: FitOptions = FitOptions(), callback=None):
    """SD-RVM for unknown block structure via overlapping candidate blocks.

    A coordinate stays active while any block covering it is active.
    """
    _require(signal_blocks, system.n, "overlapping", "signal")
    _require(noise_blocks, system.m, "overlapping", "noise")
    validate(system, signal_blocks, None, noise_blocks)
    G, J = signal_blocks.incidence(), noise_blocks.incidence()
    base = initial_state(system)

    def expand(tg, tb):
        return PrecisionState(combine_precisions(G, tg),
                              combine_precisions(J, tb), tg, tb)

    state = expand(initial_overlap_precisions(signal_blocks, 1.0),
                   initial_overlap_precisions(noise_blocks, base.beta[0]))

    def step(state, post):
        return (overlap_gamma_update(state, post, G, priors, opts),
                overlap_beta_update(system, state, post, J, priors, opts))

    return _run(system, state, step, expand, priors, opts, callback)


def sparse_dense_noise_layout(m: int) -> BlockLayout:
    """Singleton noise blocks plus one block spanning every measurement."""
    return BlockLayout(tuple([j] for j in range(m)) + (tuple(range(m)),), m,
                       "overlapping")


def fit_sdrvm_sparse_dense(system: LinearSystem,
                           priors: HyperPriors = HyperPriors(),
                           opts: FitOptions = FitOptions(), callback=None):
    """Componentwise signal, noise = per-sample sparse part + one dense part.

    Noise precision of sample j is ``1 / (1/tb_j + 1/tb_dense)``; the last
    entry of ``state.tilde_beta`` is the dense-noise precision.
    """
    return fit_sdrvm_overlap(system,
                             BlockLayout.singletons(system.n, "overlapping"),
                             sparse_dense_noise_layout(system.m),
                             priors, opts, callback)
