from __future__ import annotations

import math
from dataclasses import dataclass, field

MAX_DEPTH_CAP = 5
LEARNER_KINDS = ("boosted", "ridge")
_ALIASES = {"boosted-trees": "boosted", "boosting": "boosted", "gbm": "boosted"}


class LearnerConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerParams:
    """Hyperparameters shared by the first-stage regressors.

    Nothing is checked at construction; :meth:`validate` runs before every
    fit and before any tuning starts.
    """

    max_depth: int = 3
    n_stages: int = 100
    learning_rate: float = 0.1
    min_samples_leaf: int = 20
    subsample_fraction: float = 0.8
    ridge_lambda: float = 1.0
    seed: int = 0

    def validate(self, kind: str = "boosted") -> "LearnerParams":
        kind = normalize_kind(kind)
        if kind == "ridge":
            if not (self.ridge_lambda >= 0 and math.isfinite(self.ridge_lambda)):
                raise LearnerConfigError(f"ridge_lambda must be a non-negative real, got {self.ridge_lambda}")
            return self
        if not 1 <= self.max_depth:
            raise LearnerConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.max_depth > MAX_DEPTH_CAP:
            raise LearnerConfigError(f"max_depth {self.max_depth} exceeds the depth cap {MAX_DEPTH_CAP}")
        if self.n_stages < 0:
            raise LearnerConfigError(f"n_stages must be >= 0, got {self.n_stages}")
        if not 0 < self.learning_rate <= 1:
            raise LearnerConfigError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.min_samples_leaf < 1:
            raise LearnerConfigError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if not 0 < self.subsample_fraction <= 1:
            raise LearnerConfigError(f"subsample_fraction must be in (0, 1], got {self.subsample_fraction}")
        return self


def normalize_kind(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in LEARNER_KINDS:
        raise LearnerConfigError(f"unknown learner kind {kind!r}; choose from {LEARNER_KINDS}")
    return kind


@dataclass(frozen=True)
class RegressorSpec:
    kind: str = "boosted"
    params: LearnerParams = field(default_factory=LearnerParams)

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))

    def build(self, seed: int | None = None):
        from .boosting import GradientBoostingRegressor
        from .ridge import RidgeRegressor

        params = self.params if seed is None else _with_seed(self.params, seed)
        params.validate(self.kind)
        if self.kind == "ridge":
            return RidgeRegressor(params.ridge_lambda)
        return GradientBoostingRegressor(params)


def _with_seed(params: LearnerParams, seed: int) -> LearnerParams:
    from dataclasses import replace

    return replace(params, seed=int(seed))


@dataclass(frozen=True)
class FitReport:
    """Squared-error fit quality; ``r2`` is None when the target is constant."""

    mse: float
    r2: float | None

    @property
    def r2_defined(self) -> bool:
        return self.r2 is not None
