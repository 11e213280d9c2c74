"""Fold assignment, fit metrics and grid search on negative MSE."""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .params import LearnerParams, RegressorSpec, FitReport
from .tree import bin_features

DEFAULT_GRID: tuple[LearnerParams, ...] = tuple(
    LearnerParams(max_depth=d, learning_rate=lr, n_stages=m, min_samples_leaf=20, subsample_fraction=0.8)
    for d, lr, m in itertools.product((2, 3, 5), (0.05, 0.1), (100, 300))
)


def assign_folds(groups, n_folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per row, keeping rows that share a group in the same fold.

    Distinct groups are shuffled with ``seed`` and dealt round-robin, so
    group counts per fold differ by at most one. Pass an int to treat every
    row as its own group.
    """
    if n_folds < 2:
        raise ValueError(f"cross-fitting needs at least 2 folds, got {n_folds}")
    if np.isscalar(groups):
        groups = np.arange(int(groups))
    uniq, inverse = np.unique(np.asarray(groups), return_inverse=True)
    if len(uniq) < n_folds:
        raise ValueError(f"{len(uniq)} groups cannot fill {n_folds} folds")
    order = np.random.default_rng(seed).permutation(len(uniq))
    fold_of_group = np.empty(len(uniq), dtype=np.int64)
    fold_of_group[order] = np.arange(len(uniq)) % n_folds
    return fold_of_group[inverse.ravel()]


def fit_report(y, pred) -> FitReport:
    y = np.asarray(y, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if y.shape != pred.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {pred.shape}")
    mse = float(np.mean((y - pred) ** 2))
    var = float(np.var(y))
    r2 = None if var == 0.0 else 1.0 - mse / var
    return FitReport(mse, r2)


def evaluate(model, X, y) -> FitReport:
    """MSE and R^2 of a fitted model's predictions on (X, y)."""
    return fit_report(y, model.predict(X))


def tune(
    grid: Sequence[LearnerParams],
    X,
    y,
    n_folds: int = 5,
    kind: str = "boosted",
    seed: int = 0,
    groups=None,
) -> tuple[LearnerParams, FitReport]:
    """Pick the candidate with the highest mean validation -MSE.

    Every candidate is validated before anything is fitted. Ties go to
    fewer stages, then shallower depth, then grid order. The returned
    report pools the winner's out-of-fold predictions. ``groups`` keeps
    related rows (both sides of a fixture) in the same validation fold.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty tuning grid")
    for params in grid:
        params.validate(kind)

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    folds = assign_folds(len(y) if groups is None else groups, n_folds, seed)
    scores = np.zeros(len(grid))
    oof = np.zeros((len(grid), len(y)))
    for f in range(n_folds):
        train, test = folds != f, folds == f
        data = bin_features(X[train]) if kind != "ridge" else X[train]
        for c, params in enumerate(grid):
            model = RegressorSpec(kind, params).build().fit(data, y[train])
            pred = model.predict(X[test])
            oof[c, test] = pred
            scores[c] -= np.mean((y[test] - pred) ** 2) / n_folds

    best = min(range(len(grid)), key=lambda c: (-scores[c], grid[c].n_stages, grid[c].max_depth, c))
    return grid[best], fit_report(y, oof[best])
