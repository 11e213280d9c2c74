"""First-stage regressors: depth-capped trees, gradient boosting, ridge."""
from .boosting import GradientBoostingRegressor, fit_gradient_boosting
from .params import (
    MAX_DEPTH_CAP,
    FitReport,
    LearnerConfigError,
    LearnerParams,
    RegressorSpec,
)
from .ridge import RidgeRegressor
from .selection import DEFAULT_GRID, assign_folds, evaluate, fit_report, tune
from .tree import BinnedMatrix, RegressionTree, bin_features, fit_regression_tree
