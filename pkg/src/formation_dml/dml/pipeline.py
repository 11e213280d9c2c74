"""End-to-end estimation: encode, cross-fit, final stage, assemble."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..dataset.table import AnalysisTable, check_target
from ..encoding import build_effect_coded_matrix
from ..learners import FitReport, LearnerParams, RegressorSpec, tune
from .crossfit import ResidualSet, cross_fit_residuals
from .final_stage import P_REFERENCES, SE_VARIANTS, FinalStage, final_stage_ols
from .matrix import BetaMatrix, assemble_matrix, cell_count_grid, estimate_home_effect


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    target: str = "goals"
    n_folds: int = 5
    seed: int = 0
    learner: RegressorSpec = field(default_factory=RegressorSpec)
    se_variant: str = "HC1"
    p_reference: str = "normal"
    k: int = 6
    omitted: tuple[int, int] | None = None
    n_jobs: int = 1
    min_rows_per_fold: int = 10
    # when set, the outcome model is tuned on this grid once and the winner
    # is used for every first-stage fit
    tune_grid: tuple[LearnerParams, ...] | None = None

    def validate(self) -> "RunConfig":
        try:
            check_target(self.target)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.n_folds < 2:
            raise ConfigError(f"cross-fitting needs n_folds >= 2, got {self.n_folds}")
        if self.se_variant not in SE_VARIANTS:
            raise ConfigError(f"se_variant must be one of {SE_VARIANTS}")
        if self.p_reference not in P_REFERENCES:
            raise ConfigError(f"p_reference must be one of {P_REFERENCES}")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        self.learner.params.validate(self.learner.kind)
        if self.tune_grid is not None:
            if not self.tune_grid:
                raise ConfigError("tune_grid is empty")
            for params in self.tune_grid:
                params.validate(self.learner.kind)
        return self


@dataclass
class Diagnostics:
    cell_counts: np.ndarray
    first_stage: dict[str, FitReport]
    antisymmetry_gap: float
    antisymmetry_bound_ok: bool
    raw_diagonal: np.ndarray
    orthogonality: dict[str, float]
    n_rows: int
    n_groups: int
    seconds: float
    learner: RegressorSpec | None = None
    tuning: FitReport | None = None

    @property
    def max_orthogonality_corr(self) -> float:
        return max(self.orthogonality.values()) if self.orthogonality else 0.0


@dataclass
class PipelineResult:
    matrix: BetaMatrix
    diagnostics: Diagnostics
    residuals: ResidualSet
    final: FinalStage
    config: RunConfig


def orthogonality_report(X: np.ndarray, residuals: ResidualSet, names=None) -> dict[str, float]:
    """Largest |corr(x, r)| over confounder columns, for each residual vector."""
    X = np.asarray(X, dtype=np.float64)
    sd = X.std(axis=0)
    keep = sd > 0
    Xs = (X[:, keep] - X[:, keep].mean(axis=0)) / sd[keep]
    R = np.column_stack([residuals.r_Y, residuals.r_D])
    rsd = R.std(axis=0)
    rsd[rsd == 0] = np.inf
    Rs = (R - R.mean(axis=0)) / rsd
    corr = np.abs(Xs.T @ Rs) / len(X)
    names = names or ["Y"] + [f"D[{c.i},{c.j}]" for c in residuals.columns]
    return {name: float(corr[:, c].max()) if corr.size else 0.0 for c, name in enumerate(names)}


def antisymmetry_within_bound(matrix: BetaMatrix, factor: float = 2.0) -> bool:
    k = matrix.k
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            gap = abs(matrix.beta[i, j] + matrix.beta[j, i])
            if gap > factor * (matrix.se[i, j] + matrix.se[j, i]):
                return False
    return True


def run_pipeline(table: AnalysisTable, config: RunConfig | None = None) -> PipelineResult:
    """Estimate the effect matrix for ``config.target`` on an analysis table."""
    config = (config or RunConfig()).validate()
    start = time.perf_counter()
    cells = np.asarray(table.cells)
    if len({tuple(c) for c in cells}) < 2:
        raise ConfigError("need at least two distinct treatment cells")

    y = table.outcome(config.target)
    design = build_effect_coded_matrix(cells, config.k, config.omitted)
    learner, tuning = config.learner, None
    if config.tune_grid is not None:
        best, tuning = tune(config.tune_grid, table.X, y, config.n_folds, learner.kind,
                            config.seed, groups=table.fixture_id)
        learner = RegressorSpec(learner.kind, replace(best, seed=learner.params.seed))
    residuals = cross_fit_residuals(
        table.X, y, design,
        learner=learner,
        n_folds=config.n_folds,
        seed=config.seed,
        groups=table.fixture_id,
        n_jobs=config.n_jobs,
        min_rows_per_fold=config.min_rows_per_fold,
    )
    final = final_stage_ols(residuals, config.se_variant, config.p_reference)
    counts = cell_count_grid(cells, config.k)
    matrix = assemble_matrix(
        final.coef, final.cov, config.k,
        home_effect=estimate_home_effect(y, table.is_home),
        cell_counts=counts,
        omitted=config.omitted,
        p_reference=config.p_reference,
        df=final.n - len(final.coef),
    )
    diagnostics = Diagnostics(
        cell_counts=counts,
        first_stage=residuals.first_stage_reports,
        antisymmetry_gap=matrix.antisymmetry_gap(),
        antisymmetry_bound_ok=antisymmetry_within_bound(matrix),
        raw_diagonal=matrix.raw_diagonal,
        orthogonality=orthogonality_report(table.X, residuals),
        n_rows=len(y),
        n_groups=len(np.unique(table.fixture_id)),
        seconds=time.perf_counter() - start,
        learner=learner,
        tuning=tuning,
    )
    return PipelineResult(matrix, diagnostics, residuals, final, config)
