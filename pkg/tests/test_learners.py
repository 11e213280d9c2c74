import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formation_dml.learners import (
    DEFAULT_GRID,
    MAX_DEPTH_CAP,
    GradientBoostingRegressor,
    LearnerConfigError,
    LearnerParams,
    RegressorSpec,
    RidgeRegressor,
    assign_folds,
    bin_features,
    evaluate,
    fit_gradient_boosting,
    fit_regression_tree,
    fit_report,
    tune,
)


def brute_force_tree(X, y, depth, max_depth, min_leaf):
    """Recursive exhaustive split search; returns a prediction function.

    Scans every feature and every gap between consecutive distinct values,
    keeping the first strictly best (feature, threshold) in scan order.
    """
    n = len(y)
    mean = float(np.mean(y))
    if depth >= max_depth or n < 2 * min_leaf or np.ptp(y) == 0:
        return lambda x: mean
    best = None
    sse0 = float(np.sum((y - mean) ** 2))
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for a, b in zip(vals[:-1], vals[1:]):
            left = X[:, f] <= a
            nl = int(left.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            sse = float(np.sum((y[left] - y[left].mean()) ** 2) + np.sum((y[~left] - y[~left].mean()) ** 2))
            gain = sse0 - sse
            if gain > 1e-12 and (best is None or gain > best[0] + 1e-12):
                best = (gain, f, (a + b) / 2)
    if best is None:
        return lambda x: mean
    _, f, t = best
    mask = X[:, f] <= t
    lf = brute_force_tree(X[mask], y[mask], depth + 1, max_depth, min_leaf)
    rf = brute_force_tree(X[~mask], y[~mask], depth + 1, max_depth, min_leaf)
    return lambda x: lf(x) if x[f] <= t else rf(x)


# ---- single trees -------------------------------------------------------------

def test_step_function_tree():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    tree = fit_regression_tree(X, y, LearnerParams(max_depth=1, min_samples_leaf=1))
    assert tree.node_count == 3
    assert tree.threshold[0] == 1.5
    np.testing.assert_array_equal(tree.predict(X), y)


def test_constant_target_single_leaf():
    X = np.random.default_rng(0).normal(size=(30, 3))
    tree = fit_regression_tree(X, np.full(30, 2.5), LearnerParams(min_samples_leaf=1))
    assert tree.node_count == 1
    np.testing.assert_array_equal(tree.predict(X), 2.5)


@pytest.mark.parametrize("depth", [0, -1, 6])
def test_depth_bounds(depth):
    with pytest.raises(LearnerConfigError):
        fit_regression_tree(np.zeros((3, 1)), np.zeros(3), LearnerParams(max_depth=depth))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        fit_regression_tree(np.zeros((3, 1)), np.zeros(4))


@pytest.mark.parametrize("seed", range(8))
def test_tree_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n, p = 60, 3
    X = np.round(rng.normal(size=(n, p)), 1)  # repeated values exercise ties in x
    y = np.sin(X[:, 0]) + X[:, 1] * (X[:, 2] > 0) + 0.1 * rng.normal(size=n)
    depth = 1 + seed % 3
    leaf = 1 + seed % 4
    tree = fit_regression_tree(X, y, LearnerParams(max_depth=depth, min_samples_leaf=leaf))
    oracle = brute_force_tree(X, y, 0, depth, leaf)
    # rounded inputs allow equal-gain splits on different features, which agree
    # on the training rows but not elsewhere, so compare on the training rows
    np.testing.assert_allclose(tree.predict(X), [oracle(x) for x in X], rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_tree_matches_sklearn(seed):
    sk = pytest.importorskip("sklearn.tree")
    rng = np.random.default_rng(100 + seed)
    X = rng.normal(size=(400, 5))
    y = X[:, 0] ** 2 + np.abs(X[:, 1]) + rng.normal(size=400)
    params = LearnerParams(max_depth=4, min_samples_leaf=7)
    ours = fit_regression_tree(X, y, params)
    ref = sk.DecisionTreeRegressor(max_depth=4, min_samples_leaf=7, random_state=0).fit(X, y)
    probe = rng.normal(size=(200, 5))
    np.testing.assert_allclose(ours.predict(probe), ref.predict(probe), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    depth=st.integers(1, MAX_DEPTH_CAP),
    leaf=st.integers(1, 10),
    n=st.integers(1, 300),
)
def test_depth_cap_audit(seed, depth, leaf, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = rng.normal(size=n)
    tree = fit_regression_tree(X, y, LearnerParams(max_depth=depth, min_samples_leaf=leaf))
    assert tree.max_path_depth <= depth
    leaves = tree.feature < 0
    assert np.all(tree.count[leaves] >= min(leaf, n))
    # every internal node's children partition its rows
    internal = np.flatnonzero(~leaves)
    assert np.all(tree.count[tree.left[internal]] + tree.count[tree.right[internal]] == tree.count[internal])


def test_shift_invariant_structure():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(300, 4))
    y = X[:, 0] - X[:, 2] ** 2 + rng.normal(size=300)
    a = fit_regression_tree(X, y, LearnerParams(max_depth=4, min_samples_leaf=5))
    b = fit_regression_tree(X + np.array([0.0, 100.0, -7.0, 0.5]), y, LearnerParams(max_depth=4, min_samples_leaf=5))
    assert a.structure() == b.structure()
    np.testing.assert_array_equal(a.value, b.value)


def test_binning_rejects_nan():
    with pytest.raises(ValueError):
        bin_features(np.array([[1.0], [np.nan]]))


# ---- boosting ----------------------------------------------------------------

def test_zero_stages_is_mean():
    rng = np.random.default_rng(1)
    X, y = rng.normal(size=(50, 2)), rng.normal(size=50)
    model = fit_gradient_boosting(X, y, LearnerParams(n_stages=0))
    np.testing.assert_allclose(model.predict(X), y.mean())
    assert evaluate(model, X, y).r2 == pytest.approx(0.0, abs=1e-12)


def test_single_full_stage_equals_tree_on_centered_y():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(200, 3)), rng.normal(size=200)
    p = LearnerParams(n_stages=1, learning_rate=1.0, subsample_fraction=1.0, max_depth=3, min_samples_leaf=5)
    model = fit_gradient_boosting(X, y, p)
    tree = fit_regression_tree(X, y - y.mean(), p)
    np.testing.assert_allclose(model.predict(X), y.mean() + tree.predict(X), atol=1e-12)


def test_step_function_boosting():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    p = LearnerParams(n_stages=50, learning_rate=0.1, subsample_fraction=1.0, max_depth=1, min_samples_leaf=1)
    model = fit_gradient_boosting(X, y, p)
    # residual shrinks by (1 - lr) per stage: mse = 0.25 * 0.9**100
    assert model.train_mse_[-1] == pytest.approx(0.25 * 0.9 ** 100, rel=1e-9)
    assert np.mean((model.predict(X) - y) ** 2) < 0.01


@pytest.mark.parametrize("seed", range(10))
def test_training_mse_monotone(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(50, 400))
    X = rng.normal(size=(n, 4))
    y = np.sin(2 * X[:, 0]) + X[:, 1] * X[:, 2] + rng.normal(size=n)
    p = LearnerParams(n_stages=60, learning_rate=float(rng.uniform(0.05, 1.0)),
                      subsample_fraction=1.0, max_depth=int(rng.integers(1, 6)),
                      min_samples_leaf=int(rng.integers(1, 20)), seed=seed)
    mse = np.array(fit_gradient_boosting(X, y, p).train_mse_)
    assert np.all(np.diff(mse) <= 1e-12)


def test_boosting_deterministic_bytes():
    rng = np.random.default_rng(4)
    X, y = rng.normal(size=(300, 5)), rng.normal(size=300)
    p = LearnerParams(seed=11)
    a = fit_gradient_boosting(X, y, p).predict(X)
    b = fit_gradient_boosting(X, y, p).predict(X)
    assert a.tobytes() == b.tobytes()
    c = fit_gradient_boosting(X, y, LearnerParams(seed=12)).predict(X)
    assert a.tobytes() != c.tobytes()


def test_predict_column_check():
    model = fit_gradient_boosting(np.zeros((30, 2)) + np.arange(30)[:, None], np.arange(30.0))
    with pytest.raises(ValueError):
        model.predict(np.zeros((3, 3)))
    assert "stage 1" in model.dump(["a", "b"])


# ---- ridge -----------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_ridge_zero_matches_least_squares(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 5))
    y = X @ rng.normal(size=5) + 3.0 + rng.normal(size=40)
    model = RidgeRegressor(0.0).fit(X, y)
    A = np.column_stack([np.ones(40), X])
    ref = np.linalg.solve(A.T @ A, A.T @ y)
    np.testing.assert_allclose(np.r_[model.intercept_, model.coef_], ref, rtol=1e-8, atol=1e-10)


def test_ridge_shrinks():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = X @ np.array([2.0, -1.0, 0.5])
    small = np.linalg.norm(RidgeRegressor(100.0).fit(X, y).coef_)
    assert small < np.linalg.norm(RidgeRegressor(0.0).fit(X, y).coef_)


def test_ridge_closed_form_with_penalty():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    lam = 2.5
    model = RidgeRegressor(lam).fit(X, y)
    Xc, yc = X - X.mean(0), y - y.mean()
    ref = np.linalg.solve(Xc.T @ Xc + lam * np.eye(4), Xc.T @ yc)
    np.testing.assert_allclose(model.coef_, ref, rtol=1e-8)


# ---- evaluation and tuning ---------------------------------------------------

def test_fit_report_cases():
    y = np.array([0.0, 2.0])
    assert fit_report(y, y) == fit_report(y, y.copy())
    assert fit_report(y, y).mse == 0 and fit_report(y, y).r2 == 1
    rep = fit_report(y, np.array([1.0, 1.0]))
    assert rep.mse == 1.0 and rep.r2 == 0.0
    const = fit_report(np.ones(3), np.zeros(3))
    assert const.mse == 1.0 and const.r2 is None and not const.r2_defined


def test_tune_single_candidate():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(100, 2)), rng.normal(size=100)
    cand = LearnerParams(n_stages=10)
    best, rep = tune([cand], X, y, n_folds=3)
    assert best == cand and rep.mse > 0 and rep.r2 <= 1


def test_tune_rejects_depth_before_fitting():
    with pytest.raises(LearnerConfigError, match="depth cap"):
        tune([LearnerParams(n_stages=10), LearnerParams(max_depth=6)], np.zeros((10, 1)), np.zeros(10))


def test_tune_tie_break():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(80, 2)), rng.normal(size=80)
    # zero stages: identical scores regardless of depth; the shallower one wins
    grid = [LearnerParams(n_stages=0, max_depth=4), LearnerParams(n_stages=0, max_depth=2)]
    assert tune(grid, X, y, n_folds=4)[0] == grid[1]
    grid = [LearnerParams(n_stages=0, max_depth=2, learning_rate=0.5), LearnerParams(n_stages=0, max_depth=2)]
    assert tune(grid, X, y, n_folds=4)[0] == grid[0]


def test_tune_prefers_signal():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(300, 2))
    y = np.where(X[:, 0] > 0, 2.0, -2.0) + 0.1 * rng.normal(size=300)
    grid = [LearnerParams(n_stages=0), LearnerParams(n_stages=50, learning_rate=0.3)]
    best, rep = tune(grid, X, y, n_folds=3)
    assert best == grid[1] and rep.r2 > 0.8


def test_default_grid():
    assert len(DEFAULT_GRID) == 12
    for p in DEFAULT_GRID:
        p.validate()


def test_assign_folds_groups_and_balance():
    groups = np.repeat(np.arange(23), 2)
    folds = assign_folds(groups, 5, seed=3)
    for g in range(23):
        assert len(set(folds[groups == g])) == 1
    per_fold = np.bincount(folds) // 2
    assert per_fold.max() - per_fold.min() <= 1
    with pytest.raises(ValueError):
        assign_folds(10, 1)


def test_spec_build_and_kinds():
    assert isinstance(RegressorSpec("ridge").build(), RidgeRegressor)
    assert isinstance(RegressorSpec("boosted-trees").build(seed=3), GradientBoostingRegressor)
    assert RegressorSpec("boosted-trees").build(seed=3).params.seed == 3
    with pytest.raises(LearnerConfigError):
        RegressorSpec("forest")
    with pytest.raises(LearnerConfigError):
        RegressorSpec("ridge", LearnerParams(ridge_lambda=-1)).build()


def test_tune_respects_groups(monkeypatch):
    import formation_dml.learners.selection as sel

    seen = {}
    real = sel.assign_folds

    def spy(groups, n_folds, seed=0):
        seen["groups"] = groups
        return real(groups, n_folds, seed)

    monkeypatch.setattr(sel, "assign_folds", spy)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 2))
    groups = np.repeat(np.arange(30), 2)
    tune([LearnerParams(n_stages=3)], X, X[:, 0], n_folds=3, groups=groups)
    assert np.array_equal(seen["groups"], groups)
