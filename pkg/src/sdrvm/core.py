"""Domain types, validation and the dense SPD numerics shared by every solver."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as la


class SdrvmError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(SdrvmError, ValueError):
    pass


class InvalidBlockLayout(SdrvmError, ValueError):
    pass


class NonPositivePrecision(SdrvmError, ValueError):
    pass


class NotPositiveDefinite(SdrvmError, np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class LinearSystem:
    """Measurement matrix ``A`` (m x n) and observations ``y`` (m)."""

    A: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        y = np.array(self.y, dtype=float)
        if A.ndim != 2:
            raise DimensionMismatch(f"A must be 2-D, got shape {A.shape}")
        if y.ndim != 1:
            raise DimensionMismatch(f"y must be 1-D, got shape {y.shape}")
        if A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionMismatch(f"A must be at least 1x1, got {A.shape}")
        if A.shape[0] != y.shape[0]:
            raise DimensionMismatch(
                f"A has {A.shape[0]} rows but y has length {y.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
            raise ValueError("A and y must contain only finite values")
        A.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class HyperPriors:
    """Gamma hyper-prior constants; all zero is the non-informative limit."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"hyper-prior {name} must be >= 0, got {v}")


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 1000
    rel_tol: float = 1e-4
    prune_threshold: float = 1e12
    # must stay below 1/prune_threshold**2 or diverging precisions stall
    denom_floor: float = 1e-30
    # precisions never drop below this, even when an update numerator is 0
    precision_floor: float = 1e-12

    def __post_init__(self):
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if not self.prune_threshold > 1:
            raise ValueError("prune_threshold must be > 1")
        if not self.denom_floor >= 0:
            raise ValueError("denom_floor must be >= 0")
        if not self.precision_floor > 0:
            raise ValueError("precision_floor must be > 0")


@dataclass(frozen=True)
class PrecisionState:
    """Signal precisions ``gamma`` and noise precisions ``beta``.

    A pruned precision is stored as ``np.inf``. For a pruned signal
    coordinate the column is dropped and its estimate is exactly zero; for a
    pruned noise coordinate the measurement is treated as noiseless (the
    solvers substitute ``prune_threshold`` when building matrices).

    ``tilde_gamma``/``tilde_beta`` hold per-block precisions for the block
    solvers and are ``None`` for the componentwise ones.
    """

    gamma: np.ndarray
    beta: np.ndarray
    tilde_gamma: Optional[np.ndarray] = None
    tilde_beta: Optional[np.ndarray] = None

    @property
    def active_signal(self) -> np.ndarray:
        return np.flatnonzero(np.isfinite(self.gamma))

    @property
    def active_noise(self) -> np.ndarray:
        return np.flatnonzero(np.isfinite(self.beta))


@dataclass(frozen=True)
class Posterior:
    """MAP mean and covariance restricted to the active signal columns.

    ``sigma`` is k x k over ``active``; ``x_hat`` has full length n with
    zeros at pruned coordinates.
    """

    x_hat: np.ndarray
    sigma: np.ndarray
    active: np.ndarray
    logdet_precision: float = 0.0

    def full_sigma(self, n: Optional[int] = None) -> np.ndarray:
        n = self.x_hat.shape[0] if n is None else n
        S = np.zeros((n, n))
        S[np.ix_(self.active, self.active)] = self.sigma
        return S

    def sigma_diag(self) -> np.ndarray:
        d = np.zeros(self.x_hat.shape[0])
        d[self.active] = np.diag(self.sigma)
        return d


@dataclass(frozen=True)
class BlockLayout:
    """Index blocks over positions ``0..size-1``.

    ``kind`` is ``"disjoint"`` (a partition) or ``"overlapping"`` (a cover).
    """

    blocks: tuple
    size: int
    kind: str = "disjoint"

    def __post_init__(self):
        blocks = tuple(np.asarray(sorted(set(int(i) for i in b)), dtype=int)
                       for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if self.kind not in ("disjoint", "overlapping"):
            raise InvalidBlockLayout(f"unknown layout kind {self.kind!r}")
        if self.size < 1:
            raise InvalidBlockLayout("layout size must be >= 1")
        if len(blocks) == 0:
            raise InvalidBlockLayout("layout has no blocks")
        counts = np.zeros(self.size, dtype=int)
        for k, b in enumerate(blocks):
            if b.size == 0:
                raise InvalidBlockLayout(f"block {k} is empty")
            if b[0] < 0 or b[-1] >= self.size:
                raise InvalidBlockLayout(
                    f"block {k} has an index outside 0..{self.size - 1}")
            counts[b] += 1
        if np.any(counts == 0):
            missing = np.flatnonzero(counts == 0)
            raise InvalidBlockLayout(
                f"positions {missing[:5].tolist()} are not covered by any block")
        if self.kind == "disjoint" and np.any(counts > 1):
            dup = np.flatnonzero(counts > 1)
            raise InvalidBlockLayout(
                f"positions {dup[:5].tolist()} appear in more than one block "
                "of a disjoint layout")

    @classmethod
    def singletons(cls, size: int, kind: str = "disjoint") -> "BlockLayout":
        return cls(tuple([i] for i in range(size)), size, kind)

    @classmethod
    def contiguous(cls, size: int, block_size: int) -> "BlockLayout":
        """Disjoint partition into consecutive runs (last one may be short)."""
        return cls(tuple(range(s, min(s + block_size, size))
                         for s in range(0, size, block_size)), size, "disjoint")

    @classmethod
    def windows(cls, size: int, width: int, stride: int = 1) -> "BlockLayout":
        """Overlapping cover by every contiguous window of ``width``."""
        width = min(width, size)
        starts = list(range(0, size - width + 1, stride))
        if starts[-1] != size - width:
            starts.append(size - width)
        return cls(tuple(range(s, s + width) for s in starts), size,
                   "overlapping")

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([b.size for b in self.blocks], dtype=float)

    def labels(self) -> np.ndarray:
        """Block id of every position (disjoint layouts only)."""
        if self.kind != "disjoint":
            raise InvalidBlockLayout("labels are defined for disjoint layouts")
        lab = np.empty(self.size, dtype=int)
        for k, b in enumerate(self.blocks):
            lab[b] = k
        return lab

    def incidence(self) -> np.ndarray:
        """Dense 0/1 matrix, one row per block."""
        M = np.zeros((len(self.blocks), self.size))
        for k, b in enumerate(self.blocks):
            M[k, b] = 1.0
        return M

    def coverage(self) -> np.ndarray:
        return self.incidence().sum(axis=0)


@dataclass
class FitReport:
    iterations: int = 0
    converged: bool = False
    evidence_trace: list = field(default_factory=list)
    active_signal_set: np.ndarray = field(
        default_factory=lambda: np.zeros(0, dtype=int))
    active_noise_set: np.ndarray = field(
        default_factory=lambda: np.zeros(0, dtype=int))
    elapsed_seconds: float = 0.0
    iteration_seconds: list = field(default_factory=list)


def spd_solve(M, R):
    """Solve ``M X = R`` for symmetric positive definite ``M``.

    Returns ``(X, logdet)`` where ``logdet`` is ``log det M``, a free
    by-product of the Cholesky factor.
    """
    M = np.asarray(M, dtype=float)
    R = np.asarray(R, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatch(f"M must be square and non-empty, got {M.shape}")
    if R.shape[0] != M.shape[0]:
        raise DimensionMismatch(
            f"R has {R.shape[0]} rows, expected {M.shape[0]}")
    scale = np.max(np.abs(M))
    if np.max(np.abs(M - M.T)) > 1e-12 * max(scale, 1.0):
        raise ValueError("M is not symmetric")
    try:
        L = la.cholesky(M, lower=True, check_finite=False)
    except la.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    diag = np.diag(L)
    if not np.all(diag > 0) or not np.all(np.isfinite(diag)):
        raise NotPositiveDefinite("non-positive pivot in Cholesky factor")
    X = la.cho_solve((L, True), R, check_finite=False)
    return X, 2.0 * np.sum(np.log(diag))


def validate(system: LinearSystem, layout: Optional[BlockLayout] = None,
             state: Optional[PrecisionState] = None,
             noise_layout: Optional[BlockLayout] = None) -> None:
    """Check mutual consistency of a problem instance; raise on violation.

    ``layout`` covers the signal positions and ``noise_layout`` the
    measurement positions. Per-block precisions in ``state`` are checked
    against the corresponding layout.
    """
    if not isinstance(system, LinearSystem):
        system = LinearSystem(*system)
    m, n = system.A.shape
    if system.y.shape != (m,):
        raise DimensionMismatch(f"y has shape {system.y.shape}, expected ({m},)")
    if layout is not None and layout.size != n:
        raise DimensionMismatch(
            f"signal layout covers {layout.size} positions, A has {n} columns")
    if noise_layout is not None and noise_layout.size != m:
        raise DimensionMismatch(
            f"noise layout covers {noise_layout.size} positions, A has {m} rows")
    if state is None:
        return
    gamma = np.asarray(state.gamma, dtype=float)
    beta = np.asarray(state.beta, dtype=float)
    if gamma.shape != (n,):
        raise DimensionMismatch(f"gamma has shape {gamma.shape}, expected ({n},)")
    if beta.shape not in ((m,), (1,)):
        raise DimensionMismatch(
            f"beta has shape {beta.shape}, expected ({m},) or (1,)")
    for name, v in (("gamma", gamma), ("beta", beta),
                    ("tilde_gamma", state.tilde_gamma),
                    ("tilde_beta", state.tilde_beta)):
        if v is None:
            continue
        v = np.asarray(v, dtype=float)
        if np.any(np.isnan(v)) or np.any(v <= 0):
            raise NonPositivePrecision(f"{name} has non-positive or NaN entries")
    if state.tilde_gamma is not None and layout is not None:
        if len(state.tilde_gamma) != len(layout):
            raise DimensionMismatch("tilde_gamma length differs from block count")
    if state.tilde_beta is not None and noise_layout is not None:
        if len(state.tilde_beta) != len(noise_layout):
            raise DimensionMismatch("tilde_beta length differs from block count")

