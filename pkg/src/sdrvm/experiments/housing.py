"""House-price regression: predict the median price of held-out houses."""

from __future__ import annotations

import csv
import math
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from ..core import FitOptions, LinearSystem, SdrvmError
from .methods import run_method
from .tables import ResultTable

N_COLUMNS = 14


class ParseError(SdrvmError, ValueError):
    def __init__(self, row, column, cell):
        super().__init__(f"row {row}, column {column}: cannot parse {cell!r}")
        self.row = row
        self.column = column


class WrongColumnCount(SdrvmError, ValueError):
    pass


@dataclass(frozen=True)
class HousingDataset:
    features: np.ndarray
    prices: np.ndarray
    names: tuple

    @property
    def size(self) -> int:
        return self.prices.shape[0]


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_housing(path) -> HousingDataset:
    """Read 13 feature columns plus the price column, optional header line.

    Row numbers in errors are 1-based file lines.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [row for row in csv.reader(fh)]
    names = tuple(f"x{j}" for j in range(N_COLUMNS - 1)) + ("price",)
    start = 0
    if lines and not all(_is_number(c) for c in lines[0]):
        if len(lines[0]) != N_COLUMNS:
            raise WrongColumnCount(
                f"header has {len(lines[0])} columns, expected {N_COLUMNS}")
        names = tuple(c.strip() for c in lines[0])
        start = 1
    data = []
    for lineno, row in enumerate(lines[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != N_COLUMNS:
            raise WrongColumnCount(
                f"row {lineno} has {len(row)} columns, expected {N_COLUMNS}")
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(lineno, col, cell) from None
            if not math.isfinite(v):
                raise ParseError(lineno, col, cell)
            vals.append(v)
        data.append(vals)
    if not data:
        raise WrongColumnCount("file contains no data rows")
    arr = np.array(data)
    return HousingDataset(arr[:, :-1], arr[:, -1], names)


def split_indices(rng, size, rho):
    """Uniform random train/test split with ``round(rho * size)`` training rows."""
    n_train = int(math.floor(rho * size + 0.5))
    perm = rng.permutation(size)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def design(features, mean, std):
    """Standardised features with an intercept column appended."""
    Z = (features - mean) / std
    return np.hstack([Z, np.ones((features.shape[0], 1))])


def median_error(dataset, train, test, method, opts=FitOptions()):
    X = dataset.features[train]
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    system = LinearSystem(design(X, mean, std), dataset.prices[train])
    res = run_method(method, system, opts)
    pred = design(dataset.features[test], mean, std) @ res.x_hat
    err = abs(float(np.median(dataset.prices[test])) - float(np.median(pred)))
    return err, res.seconds


def run_housing(dataset: HousingDataset, rho: float, trials: int = 100,
                seed: int = 3, methods=("rvm", "rbrvm", "sdrvm-sd"),
                opts: FitOptions = FitOptions(), timings: bool = True,
                progress: bool = False) -> ResultTable:
    """Mean absolute error of the predicted test-set median price.

    All methods share the same split in every trial. Trials leaving fewer
    training rows than model columns are skipped with a warning.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    table = ResultTable(meta={"kind": "housing", "rho": rho, "trials": trials,
                              "seed": seed, "rows": dataset.size})
    errs = {m: [] for m in methods}
    secs = {m: [] for m in methods}
    min_rows = dataset.features.shape[1] + 1
    for t, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        train, test = split_indices(np.random.default_rng(child), dataset.size, rho)
        if train.size < min_rows or test.size == 0:
            warnings.warn(f"trial {t}: {train.size} training rows, "
                          f"need {min_rows}; skipped", RuntimeWarning)
            continue
        for m in methods:
            e, s = median_error(dataset, train, test, m, opts)
            errs[m].append(e)
            secs[m].append(s)
        if progress and (t + 1) % 10 == 0:
            print(f"[housing] rho={rho:g} trial {t + 1}/{trials}", file=sys.stderr)
    for m in methods:
        done = len(errs[m])
        err = float(np.mean(errs[m])) if done else math.nan
        table.add(rho, m, "mean_abs_median_error", err, done, seed)
        if timings:
            sec = float(np.mean(secs[m])) if done else math.nan
            table.add(rho, m, "mean_fit_seconds", sec, done, seed)
    return table

