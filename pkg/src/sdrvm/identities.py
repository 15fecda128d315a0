"""Numerical checks of the algebraic identities the solvers rely on.

Every check draws small random instances, evaluates one side through the
k x k posterior used by the solvers and the other side directly on the
m x m marginal covariance ``C = B^-1 + A Gamma^-1 A^T``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import LinearSystem, PrecisionState
from .solver import posterior

FD_TOL = 1e-5
ALGEBRAIC_TOL = 1e-9


@dataclass
class IdentityResult:
    name: str
    max_error: float
    tolerance: float
    trials: int
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)


def random_instance(rng, max_dim=8):
    m = int(rng.integers(1, max_dim + 1))
    n = int(rng.integers(1, max_dim + 1))
    A = rng.standard_normal((m, n))
    y = rng.standard_normal(m)
    gamma = np.exp(rng.uniform(-1.0, 1.0, n))
    beta = np.exp(rng.uniform(-1.0, 1.0, m))
    return LinearSystem(A, y), gamma, beta


def marginal_cov(A, gamma, beta):
    return np.diag(1.0 / beta) + (A / gamma) @ A.T


def quad_form(A, y, gamma, beta):
    return float(y @ np.linalg.solve(marginal_cov(A, gamma, beta), y))


def _five_point(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def _rel(a, b):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _fd_errors(rng, trials, which, bump):
    worst = 0.0
    for _ in range(trials):
        system, gamma, beta = random_instance(rng)
        A, y = system.A, system.y
        post = posterior(system, PrecisionState(gamma, beta))
        if which == "gamma":
            exact = post.x_hat ** 2
            params = gamma
        else:
            exact = (y - A @ post.x_hat) ** 2
            params = beta
        exact = exact * (1.0 + bump)
        scale = quad_form(A, y, gamma, beta)
        for i in range(params.size):
            def f(v, i=i):
                p = params.copy()
                p[i] = v
                if which == "gamma":
                    return quad_form(A, y, p, beta)
                return quad_form(A, y, gamma, p)
            h = 3e-2 * params[i]
            fd = _five_point(f, params[i], h)
            # tiny derivatives are compared against the cancellation floor
            floor = 1e-8 * scale / params[i]
            err = abs(fd - exact[i]) / max(abs(exact[i]), floor)
            worst = max(worst, err)
    return worst


def check_xhat_derivative(rng, trials=200, bump=0.0) -> IdentityResult:
    """d/d gamma_i of y^T C^-1 y equals x_i^2."""
    t0 = time.perf_counter()
    err = _fd_errors(rng, trials, "gamma", bump)
    return IdentityResult("xhat_derivative", err, FD_TOL, trials,
                          time.perf_counter() - t0)


def check_residual_derivative(rng, trials=200, bump=0.0) -> IdentityResult:
    """d/d beta_j of y^T C^-1 y equals the squared residual r_j^2."""
    t0 = time.perf_counter()
    err = _fd_errors(rng, trials, "beta", bump)
    return IdentityResult("residual_derivative", err, FD_TOL, trials,
                          time.perf_counter() - t0)


def check_determinant_lemma(rng, trials=200, bump=0.0) -> IdentityResult:
    """det C = det(Sigma^-1) det(Gamma^-1) det(B^-1)."""
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(trials):
        system, gamma, beta = random_instance(rng)
        post = posterior(system, PrecisionState(gamma, beta))
        sign, direct = np.linalg.slogdet(marginal_cov(system.A, gamma, beta))
        lemma = (post.logdet_precision - np.sum(np.log(gamma))
                 - np.sum(np.log(beta)) + np.log1p(bump))
        worst = max(worst, abs(np.expm1(lemma - direct)), 0.0 if sign > 0 else np.inf)
    return IdentityResult("determinant_lemma", worst, ALGEBRAIC_TOL, trials,
                          time.perf_counter() - t0)


def check_xhat_chain(rng, trials=200, bump=0.0) -> IdentityResult:
    """Gamma^-1 A^T C^-1 y equals the MAP estimate Sigma A^T B y."""
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(trials):
        system, gamma, beta = random_instance(rng)
        A, y = system.A, system.y
        post = posterior(system, PrecisionState(gamma, beta))
        lhs = (A.T @ np.linalg.solve(marginal_cov(A, gamma, beta), y)) / gamma
        worst = max(worst, _rel(lhs, post.x_hat * (1.0 + bump)))
    return IdentityResult("xhat_chain", worst, ALGEBRAIC_TOL, trials,
                          time.perf_counter() - t0)


def check_block_chain(rng, trials=200, bump=0.0) -> IdentityResult:
    """A_I^T C^-1 y equals gamma_I x_I for block-constant precisions."""
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(trials):
        system, _, beta = random_instance(rng)
        A, y = system.A, system.y
        n = system.n
        n_blocks = int(rng.integers(1, n + 1))
        labels = np.sort(np.concatenate([
            np.arange(n_blocks), rng.integers(0, n_blocks, n - n_blocks)]))
        block_gamma = np.exp(rng.uniform(-1.0, 1.0, n_blocks))
        gamma = block_gamma[labels]
        post = posterior(system, PrecisionState(gamma, beta))
        Cy = np.linalg.solve(marginal_cov(A, gamma, beta), y)
        for k in range(n_blocks):
            idx = labels == k
            lhs = A[:, idx].T @ Cy
            rhs = block_gamma[k] * post.x_hat[idx] * (1.0 + bump)
            worst = max(worst, _rel(lhs, rhs))
    return IdentityResult("block_chain", worst, ALGEBRAIC_TOL, trials,
                          time.perf_counter() - t0)


CHECKS = {
    "xhat_derivative": check_xhat_derivative,
    "residual_derivative": check_residual_derivative,
    "determinant_lemma": check_determinant_lemma,
    "xhat_chain": check_xhat_chain,
    "block_chain": check_block_chain,
}


def run_identity_suite(trials=200, seed=0, perturb=None):
    """Run every identity check; ``perturb`` names one check to sabotage.

    The perturbation scales the exact side of that identity by 1 + 1e-3 and
    exists so callers can confirm a broken identity is reported.
    """
    if perturb is not None and perturb not in CHECKS:
        raise ValueError(f"unknown identity {perturb!r}; choose from {sorted(CHECKS)}")
    seeds = np.random.SeedSequence(seed).spawn(len(CHECKS))
    results = []
    for ss, (name, check) in zip(seeds, CHECKS.items()):
        bump = 1e-3 if name == perturb else 0.0
        results.append(check(np.random.default_rng(ss), trials, bump))
    return results
