"""Componentwise SD-RVM: diagonal noise precision, one precision per sample.

The combined noise ``e + n`` gets a Gaussian prior with precision matrix
``B = diag(beta)``; the signal gets ``Gamma = diag(gamma)``. Each iteration
computes the posterior under the current precisions and then re-estimates
every precision from that same posterior.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from .core import (FitOptions, FitReport, HyperPriors, LinearSystem,
                   Posterior, PrecisionState, spd_solve)

LOG_2PI = math.log(2.0 * math.pi)


def noise_weights(beta, noiseless_precision=1e12):
    """Finite precisions used in matrix algebra; pruned (inf) entries capped."""
    beta = np.asarray(beta, dtype=float)
    return np.where(np.isfinite(beta), beta, noiseless_precision)


def initial_state(system: LinearSystem) -> PrecisionState:
    yy = float(system.y @ system.y)
    b0 = system.m / yy if yy > 0 else 1.0
    return PrecisionState(gamma=np.ones(system.n), beta=np.full(system.m, b0))


def posterior(system: LinearSystem, state: PrecisionState,
              noiseless_precision: float = 1e12) -> Posterior:
    """MAP estimate ``x = Sigma A^T B y`` with ``Sigma = (Gamma + A^T B A)^-1``."""
    A, y = system.A, system.y
    gamma = np.asarray(state.gamma, dtype=float)
    active = np.flatnonzero(np.isfinite(gamma))
    x_hat = np.zeros(system.n)
    if active.size == 0:
        return Posterior(x_hat, np.zeros((0, 0)), active, 0.0)
    beta = noise_weights(state.beta, noiseless_precision)
    Aa = A[:, active]
    BA = Aa * beta[:, None] if beta.size > 1 else Aa * beta[0]
    M = Aa.T @ BA
    M[np.diag_indices_from(M)] += gamma[active]
    sigma, logdet = spd_solve(M, np.eye(active.size))
    sigma = 0.5 * (sigma + sigma.T)
    x_hat[active] = sigma @ (BA.T @ y)
    return Posterior(x_hat, sigma, active, logdet)


def projected_variance(A, post: Posterior) -> np.ndarray:
    """Diagonal of ``A Sigma A^T`` without forming the m x m matrix."""
    if post.active.size == 0:
        return np.zeros(A.shape[0])
    Aa = A[:, post.active]
    return np.einsum("ij,ij->i", Aa @ post.sigma, Aa)


def _reestimate(num, sq, prior_rate, opts):
    """Shared tail of every precision update: floor, divide, clamp, prune."""
    den = sq + 2.0 * prior_rate if prior_rate > 0 else sq + opts.denom_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        new = np.maximum(num, 0.0) / den
    new = np.where(den > 0, new, np.inf)
    new = np.maximum(new, opts.precision_floor)
    new[new > opts.prune_threshold] = np.inf
    return new


def update_gamma(state: PrecisionState, post: Posterior,
                 priors: HyperPriors = HyperPriors(),
                 opts: FitOptions = FitOptions()) -> PrecisionState:
    gamma = np.array(state.gamma, dtype=float)
    act = post.active
    if act.size:
        g = gamma[act]
        num = 1.0 - g * np.diag(post.sigma) + 2.0 * priors.a
        gamma[act] = _reestimate(num, post.x_hat[act] ** 2, priors.b, opts)
    return replace(state, gamma=gamma)


def update_beta(system: LinearSystem, state: PrecisionState, post: Posterior,
                priors: HyperPriors = HyperPriors(),
                opts: FitOptions = FitOptions()) -> PrecisionState:
    beta = np.array(state.beta, dtype=float)
    act = np.flatnonzero(np.isfinite(beta))
    if act.size:
        resid = system.y - system.A @ post.x_hat
        s = projected_variance(system.A, post)
        num = 1.0 - beta[act] * s[act] + 2.0 * priors.c
        beta[act] = _reestimate(num, resid[act] ** 2, priors.d, opts)
    return replace(state, beta=beta)


def log_evidence(system: LinearSystem, state: PrecisionState, post: Posterior,
                 priors: HyperPriors = HyperPriors(),
                 noiseless_precision: float = 1e12) -> float:
    """Marginal log-likelihood evaluated from an already computed posterior.

    Uses ``det(C) = det(Sigma^-1) det(Gamma^-1) det(B^-1)`` and
    ``y^T C^-1 y = y^T B y - y^T B A x`` so only the k x k factor is needed.
    Prior terms run over active signal precisions and all noise precisions.
    """
    A, y = system.A, system.y
    beta = noise_weights(state.beta, noiseless_precision)
    if beta.size == 1:
        beta = np.full(system.m, beta[0])
    g = np.asarray(state.gamma, dtype=float)[post.active]
    logdet_c = post.logdet_precision - np.sum(np.log(g)) - np.sum(np.log(beta))
    By = beta * y
    quad = y @ By - By @ (A @ post.x_hat)
    value = -0.5 * system.m * LOG_2PI - 0.5 * logdet_c - 0.5 * quad
    if priors.a or priors.b:
        value += np.sum(priors.a * np.log(g) - priors.b * g)
    if priors.c or priors.d:
        value += np.sum(priors.c * np.log(beta) - priors.d * beta)
    return float(value)


def evidence(system: LinearSystem, state: PrecisionState,
             priors: HyperPriors = HyperPriors(),
             noiseless_precision: float = 1e12) -> float:
    post = posterior(system, state, noiseless_precision)
    return log_evidence(system, state, post, priors, noiseless_precision)


def nonsymmetric_cost(system: LinearSystem, post: Posterior, prev_sigma,
                      priors: HyperPriors = HyperPriors()) -> float:
    """Log-sum cost whose minimisation one SD-RVM step approximates.

    ``prev_sigma`` is the full n x n posterior covariance of the previous
    iteration (zeros on pruned coordinates). Terms whose argument is exactly
    zero, i.e. pruned coordinates with zero estimate, are skipped.
    """
    A = system.A
    prev_sigma = np.asarray(prev_sigma, dtype=float)
    x = post.x_hat
    resid = system.y - A @ x
    sig_terms = x ** 2 + np.diag(prev_sigma) + 2.0 * priors.b
    proj = np.einsum("ij,ij->i", A @ prev_sigma, A)
    noise_terms = resid ** 2 + proj + 2.0 * priors.d
    cost = (1.0 + 2.0 * priors.a) * np.sum(np.log(sig_terms[sig_terms > 0]))
    cost += (1.0 + 2.0 * priors.c) * np.sum(np.log(noise_terms[noise_terms > 0]))
    return float(cost)


def max_log_change(old, new) -> float:
    """Largest |log change| over entries finite in both; inf if any got pruned."""
    old = np.asarray(old, dtype=float)
    new = np.asarray(new, dtype=float)
    was = np.isfinite(old)
    if np.any(was & ~np.isfinite(new)):
        return math.inf
    if not np.any(was):
        return 0.0
    return float(np.max(np.abs(np.log(new[was]) - np.log(old[was]))))


def fit_sdrvm(system: LinearSystem, priors: HyperPriors = HyperPriors(),
              opts: FitOptions = FitOptions(), init: PrecisionState = None,
              callback=None):
    """Run the SD-RVM fixed-point iteration.

    Returns ``(posterior, state, report)``. ``callback(it, state, post)`` is
    called once per iteration after the posterior is formed.
    """
    t0 = time.perf_counter()
    state = init if init is not None else initial_state(system)
    cap = opts.prune_threshold
    report = FitReport()
    for it in range(int(opts.max_iter)):
        ti = time.perf_counter()
        post = posterior(system, state, cap)
        report.evidence_trace.append(log_evidence(system, state, post, priors, cap))
        if callback is not None:
            callback(it, state, post)
        gamma = update_gamma(state, post, priors, opts).gamma
        beta = update_beta(system, state, post, priors, opts).beta
        change = max(max_log_change(state.gamma, gamma),
                     max_log_change(state.beta, beta))
        state = PrecisionState(gamma, beta)
        report.iterations = it + 1
        report.iteration_seconds.append(time.perf_counter() - ti)
        if change < opts.rel_tol or not np.any(np.isfinite(gamma)):
            report.converged = True
            break
    post = posterior(system, state, cap)
    report.active_signal_set = state.active_signal
    report.active_noise_set = state.active_noise
    report.elapsed_seconds = time.perf_counter() - t0
    return post, state, report
