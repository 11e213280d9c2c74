from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .params import LearnerParams


@dataclass(frozen=True)
class BinnedMatrix:
    """Per-column ranks of a numeric matrix among that column's distinct values.

    Splitting on ``code <= b`` is identical to splitting on ``x <= t`` for
    any ``t`` strictly between the b-th and (b+1)-th distinct values, so
    trees grown on codes are exact, not histogram approximations.
    """

    codes: np.ndarray  # (n, p) int32
    n_bins: np.ndarray  # (p,)
    offsets: np.ndarray  # (p,)
    uniques: tuple[np.ndarray, ...]

    @property
    def shape(self):
        return self.codes.shape

    def threshold(self, feature: int, split: int) -> float:
        u = self.uniques[feature]
        lo, hi = u[split], u[split + 1]
        mid = lo + (hi - lo) / 2.0
        return float(mid if lo <= mid < hi else lo)


def bin_features(X) -> BinnedMatrix:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    n, p = X.shape
    if p == 0:
        raise ValueError("X has no columns")
    codes = np.empty((n, p), dtype=np.int32)
    uniques = []
    for f in range(p):
        u, inv = np.unique(X[:, f], return_inverse=True)
        codes[:, f] = inv
        uniques.append(u)
    n_bins = np.array([len(u) for u in uniques], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(n_bins)[:-1]]).astype(np.int64)
    return BinnedMatrix(codes, n_bins, offsets, tuple(uniques))


def _as_binned(X) -> BinnedMatrix:
    return X if isinstance(X, BinnedMatrix) else bin_features(X)


def _check_target(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n:
        raise ValueError(f"X has {n} rows but y has {y.shape[0]}")
    if n < 1:
        raise ValueError("need at least one row")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    return y


class RegressionTree:
    """Axis-aligned binary regression tree stored as flat node arrays."""

    def __init__(self, feature, split, threshold, left, right, value, count, depth):
        self.feature = feature
        self.split = split
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.count = count
        self.depth = depth

    @classmethod
    def grow(cls, binned: BinnedMatrix, g: np.ndarray, rows: np.ndarray, max_depth: int,
             min_samples_leaf: int) -> "RegressionTree":
        rows = np.array(rows, dtype=np.int64)
        feature, split, left, right, value, count, depth = _kernels.grow_tree(
            binned.codes, binned.n_bins, binned.offsets, g, rows, int(max_depth), int(min_samples_leaf)
        )
        threshold = np.array([
            binned.threshold(f, s) if f >= 0 else np.nan for f, s in zip(feature, split)
        ])
        return cls(feature, split, threshold, left, right, value, count, depth)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def max_path_depth(self) -> int:
        """Edges on the longest root-to-leaf path."""
        return int(self.depth.max())

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(X.shape[0])
        _kernels.apply_values(X, self.feature, self.threshold, self.left, self.right, self.value, 1.0, out)
        return out

    def add_codes(self, codes: np.ndarray, scale: float, out: np.ndarray) -> None:
        _kernels.apply_codes(codes, self.feature, self.split, self.left, self.right, self.value, scale, out)

    def structure(self) -> list[tuple[int, int]]:
        """(feature, split code) per node; leaves are (-1, 0)."""
        return [(int(f), int(s) if f >= 0 else 0) for f, s in zip(self.feature, self.split)]

    def dump(self, feature_names=None) -> str:
        lines = []

        def walk(node, indent):
            pad = "  " * indent
            if self.feature[node] < 0:
                lines.append(f"{pad}leaf value={self.value[node]:.6g} n={self.count[node]}")
                return
            f = int(self.feature[node])
            name = feature_names[f] if feature_names is not None else f"x{f}"
            lines.append(f"{pad}{name} <= {self.threshold[node]:.6g} (n={self.count[node]})")
            walk(self.left[node], indent + 1)
            walk(self.right[node], indent + 1)

        walk(0, 0)
        return "\n".join(lines)


def fit_regression_tree(X, y, params: LearnerParams | None = None) -> RegressionTree:
    """Fit a single depth-capped regression tree on all rows.

    Leaves predict the mean of their training targets; a node stays a leaf
    when it is at ``max_depth``, has fewer than ``2 * min_samples_leaf``
    rows, has zero target variance, or no admissible split reduces the
    squared error.
    """
    params = (params or LearnerParams()).validate("boosted")
    binned = _as_binned(X)
    y = _check_target(y, binned.shape[0])
    return RegressionTree.grow(binned, y, np.arange(len(y)), params.max_depth, params.min_samples_leaf)
