from __future__ import annotations

import numpy as np


class RidgeRegressor:
    """Linear baseline with an unpenalized intercept.

    Solved as a least-squares problem on the centred design stacked with
    ``sqrt(lambda) * I``, which avoids forming X'X.
    """

    def __init__(self, ridge_lambda: float = 1.0):
        self.ridge_lambda = float(ridge_lambda)

    def fit(self, X, y) -> "RidgeRegressor":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"X has shape {X.shape} but y has {y.shape[0]} rows")
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        yc = y - y_mean
        p = X.shape[1]
        if self.ridge_lambda > 0:
            A = np.vstack([Xc, np.sqrt(self.ridge_lambda) * np.eye(p)])
            b = np.concatenate([yc, np.zeros(p)])
        else:
            A, b = Xc, yc
        self.coef_, *_ = np.linalg.lstsq(A, b, rcond=None)
        self.intercept_ = float(y_mean - x_mean @ self.coef_)
        return self

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_
