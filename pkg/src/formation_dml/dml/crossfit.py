"""Cross-fitted residualization of the outcome and every treatment column."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..encoding import EffectCodedMatrix, TreatmentCell
from ..learners import FitReport, RegressorSpec, assign_folds, bin_features, fit_report


class DegenerateColumnError(ValueError):
    """A treatment column has no variation in any training split."""


@dataclass
class ResidualSet:
    r_Y: np.ndarray
    r_D: np.ndarray
    fold_assignment: np.ndarray
    columns: tuple[TreatmentCell, ...]
    column_counts: np.ndarray
    first_stage_reports: dict[str, FitReport] = field(default_factory=dict)
    groups: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.r_Y)


def task_seed(base_seed: int, *index: int) -> int:
    """Seed for one fit, derived only from the base seed and the task index."""
    return int(np.random.SeedSequence([int(base_seed), *map(int, index)]).generate_state(1)[0])


def column_name(cell) -> str:
    return f"D[{cell[0]},{cell[1]}]"


def _fit_predict(spec: RegressorSpec, seed: int, train, y_train, X_test) -> np.ndarray:
    return spec.build(seed=seed).fit(train, y_train).predict(X_test)


def cross_fit_residuals(
    X: np.ndarray,
    y: np.ndarray,
    design: EffectCodedMatrix,
    learner: RegressorSpec | None = None,
    n_folds: int = 5,
    seed: int = 0,
    groups=None,
    n_jobs: int = 1,
    min_rows_per_fold: int = 10,
) -> ResidualSet:
    """Out-of-fold residuals of y and of each effect-coded column on X.

    Rows sharing a group id (the two perspectives of a fixture) always land
    in the same fold. For every fold, one model per target is trained on the
    other folds and predicts the held-out rows; nothing is ever predicted by
    a model that saw the row. Each fit gets a seed derived from
    ``(seed, fold, column)``, so results do not depend on ``n_jobs``.
    """
    learner = learner or RegressorSpec()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    D = design.values
    n = len(y)
    if X.shape[0] != n or D.shape[0] != n:
        raise ValueError(f"row mismatch: X {X.shape[0]}, y {n}, design {D.shape[0]}")
    if n < n_folds * min_rows_per_fold:
        raise ValueError(f"{n} rows is too few for {n_folds} folds (need {n_folds * min_rows_per_fold})")

    groups = np.arange(n) if groups is None else np.asarray(groups)
    folds = assign_folds(groups, n_folds, seed)

    constant_everywhere = np.ones(D.shape[1], dtype=bool)
    for f in range(n_folds):
        train = D[folds != f]
        constant_everywhere &= np.all(train == train[:1], axis=0)
    if constant_everywhere.any():
        bad = [column_name(design.columns[c]) for c in np.flatnonzero(constant_everywhere)]
        raise DegenerateColumnError(f"treatment column constant in every training split: {', '.join(bad)}")

    targets = np.column_stack([y, D])
    preds = np.zeros_like(targets)
    jobs = []
    for f in range(n_folds):
        train, test = folds != f, folds == f
        train_data = X[train] if learner.kind == "ridge" else bin_features(X[train])
        for c in range(targets.shape[1]):
            jobs.append((f, c, train_data, targets[train, c], X[test]))

    if n_jobs == 1:
        outputs = [_fit_predict(learner, task_seed(seed, f, c), tr, yt, xt) for f, c, tr, yt, xt in jobs]
    else:
        outputs = Parallel(n_jobs=n_jobs)(
            delayed(_fit_predict)(learner, task_seed(seed, f, c), tr, yt, xt) for f, c, tr, yt, xt in jobs
        )
    for (f, c, *_), out in zip(jobs, outputs):
        preds[folds == f, c] = out

    resid = targets - preds
    names = ["Y"] + [column_name(cell) for cell in design.columns]
    reports = {name: fit_report(targets[:, c], preds[:, c]) for c, name in enumerate(names)}
    flat = (design.row_cells[:, 0] - 1) * design.k + (design.row_cells[:, 1] - 1)
    per_cell = np.bincount(flat, minlength=design.k * design.k)
    counts = np.array([per_cell[(cell.i - 1) * design.k + cell.j - 1] for cell in design.columns])
    return ResidualSet(
        r_Y=resid[:, 0],
        r_D=resid[:, 1:],
        fold_assignment=folds,
        columns=design.columns,
        column_counts=counts,
        first_stage_reports=reports,
        groups=groups,
    )
