from __future__ import annotations

import numpy as np

from . import _kernels
from .params import LearnerParams
from .tree import RegressionTree, _as_binned, _check_target


class GradientBoostingRegressor:
    """Squared-error gradient boosting over depth-capped regression trees.

    Prediction is the training mean plus ``learning_rate`` times the sum of
    the stage trees. Each stage fits the current residuals on a seeded
    subsample drawn without replacement.
    """

    def __init__(self, params: LearnerParams | None = None):
        self.params = params or LearnerParams()

    def fit(self, X, y) -> "GradientBoostingRegressor":
        p = self.params.validate("boosted")
        binned = _as_binned(X)
        y = _check_target(y, binned.shape[0])
        n = len(y)
        rng = np.random.default_rng(p.seed)
        m = max(1, int(round(p.subsample_fraction * n)))

        self.init_ = float(np.mean(y))
        F = np.full(n, self.init_)
        self.trees_: list[RegressionTree] = []
        self.train_mse_ = [float(np.mean((y - F) ** 2))]
        all_rows = np.arange(n, dtype=np.int64)
        for _ in range(p.n_stages):
            resid = y - F
            rows = all_rows if m >= n else np.sort(rng.choice(n, size=m, replace=False))
            tree = RegressionTree.grow(binned, resid, rows, p.max_depth, p.min_samples_leaf)
            tree.add_codes(binned.codes, p.learning_rate, F)
            self.trees_.append(tree)
            self.train_mse_.append(float(np.mean((y - F) ** 2)))
        self.n_features_ = binned.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} columns, got shape {X.shape}")
        out = np.full(X.shape[0], self.init_)
        lr = self.params.learning_rate
        for tree in self.trees_:
            _kernels.apply_values(X, tree.feature, tree.threshold, tree.left, tree.right, tree.value, lr, out)
        return out

    def dump(self, feature_names=None) -> str:
        parts = [f"init {self.init_:.10g}"]
        for m, tree in enumerate(self.trees_, start=1):
            parts.append(f"stage {m}\n{tree.dump(feature_names)}")
        return "\n".join(parts)


def fit_gradient_boosting(X, y, params: LearnerParams | None = None) -> GradientBoostingRegressor:
    return GradientBoostingRegressor(params).fit(X, y)
