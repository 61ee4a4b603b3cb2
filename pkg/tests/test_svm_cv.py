import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from visnet.errors import InsufficientDataError, LabelError, ShapeError
from visnet.model import cv
from visnet.model.autoencoder import AutoencoderConfig
from visnet.model.svm import (
    KernelSpec, decision_function, platt_calibrate, predict_svm, train_svm,
)


def blobs(rng, n=20, gap=3.0, d=2):
    X = np.vstack([rng.normal(size=(n, d)) - gap / 2, rng.normal(size=(n, d)) + gap / 2])
    y = np.r_[-np.ones(n), np.ones(n)]
    return X, y


def qp_dual_decision(X, y, kernel, C, Xtest):
    """Reference solution of the soft-margin dual by SLSQP."""
    K = kernel(X, X)
    Q = np.outer(y, y) * K
    n = len(y)
    res = minimize(
        lambda a: 0.5 * a @ Q @ a - a.sum(),
        np.zeros(n),
        jac=lambda a: Q @ a - 1,
        bounds=[(0, C)] * n,
        constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 1000},
    )
    a = res.x
    free = (a > 1e-6) & (a < C - 1e-6)
    b = np.mean(y[free] - (K[free] @ (a * y)))
    return kernel(Xtest, X) @ (a * y) + b


# SVM ----------------------------------------------------------------------

def test_linear_pair_midpoint():
    m = train_svm([[0, 0], [1, 1]], [-1, 1], KernelSpec("linear"))
    assert m.train_accuracy == 1.0
    assert abs(decision_function(m, [[0.5, 0.5]])[0]) <= 1e-6


def test_xor_rbf():
    X = [[0, 0], [1, 1], [0, 1], [1, 0]]
    y = [-1, -1, 1, 1]
    m = train_svm(X, y, KernelSpec("rbf", gamma=1.0), C=10)
    assert (predict_svm(m, X) == y).all()


@pytest.mark.parametrize("kind", ["linear", "rbf", "poly"])
@pytest.mark.parametrize("seed", range(3))
def test_matches_qp_reference(kind, seed):
    rng = np.random.default_rng(seed)
    X, y = blobs(rng, n=12, gap=1.5)
    kern = KernelSpec(kind).resolve(X)
    m = train_svm(X, y, kern, C=1.0, tol=1e-6)
    T = rng.normal(size=(10, 2))
    np.testing.assert_allclose(decision_function(m, T), qp_dual_decision(X, y, kern, 1.0, T), atol=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 1.0, 10.0]))
def test_dual_feasibility_and_kkt(seed, C):
    rng = np.random.default_rng(seed)
    X, y = blobs(rng, n=15, gap=1.0)
    m = train_svm(X, y, KernelSpec("rbf"), C=C)
    assert np.all(m.alpha >= 0) and np.all(m.alpha <= C)
    assert abs(np.sum(m.alpha * m.y)) <= 1e-6
    assert m.max_violation < m.tol
    f = decision_function(m, m.X)
    free = (m.alpha > 1e-8) & (m.alpha < C - 1e-8)
    assert np.all(np.abs(m.y[free] * f[free] - 1) <= m.tol)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    X, y = blobs(rng, n=10, gap=1.0)
    perm = rng.permutation(len(y))
    T = rng.normal(size=(8, 2))
    a = decision_function(train_svm(X, y), T)
    b = decision_function(train_svm(X[perm], y[perm]), T)
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_training_accuracy_consistent(rng):
    X, y = blobs(rng, gap=0.8)
    m = train_svm(X, y)
    assert np.mean(predict_svm(m, X) == y) == m.train_accuracy


def test_svm_errors():
    with pytest.raises(LabelError):
        train_svm([[0.0], [1.0]], [1, 1])
    with pytest.raises(LabelError):
        train_svm([[0.0], [1.0]], [0, 1])
    m = train_svm([[0.0], [1.0]], [-1, 1], KernelSpec("linear"))
    with pytest.raises(ShapeError):
        decision_function(m, [[1.0, 2.0]])


def test_zero_decision_goes_positive():
    m = train_svm([[0, 0], [1, 1]], [-1, 1], KernelSpec("linear"))
    m.bias = -float(decision_function(m, [[0.5, 0.5]])[0] - m.bias)
    assert predict_svm(m, [[0.5, 0.5]])[0] == 1.0


def test_gamma_default():
    X = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 4.0], [2.0, 4.0]])
    assert KernelSpec("rbf").resolve(X).gamma == pytest.approx(1 / (2 * 2.5))


# Platt --------------------------------------------------------------------

def test_platt_separated(rng):
    X, y = blobs(rng, n=30, gap=8.0)
    m = train_svm(X, y)
    cal = platt_calibrate(m, X, y)
    p = cal(decision_function(m, X))
    assert np.all(p[y > 0] >= 0.95) and np.all(p[y < 0] <= 0.05)
    grid = np.linspace(-5, 5, 101)
    assert np.all(np.diff(cal(grid)) >= 0)


def test_platt_symmetric():
    from visnet.model.svm import _fit_sigmoid

    f = np.r_[np.linspace(-2, 2, 40)]
    y = np.where(f > 0, 1.0, -1.0)
    y[[5, 34]] *= -1  # overlap so the fit stays finite
    cal = _fit_sigmoid(f, y, int((y > 0).sum()), int((y < 0).sum()), 100)
    assert abs(cal(np.array([0.0]))[0] - 0.5) <= 1e-3


def test_platt_degenerate():
    m = train_svm([[0.0], [1.0]], [-1, 1], KernelSpec("linear"))
    m.dual_coef = np.zeros(0)
    cal = platt_calibrate(m, [[0.0], [1.0], [2.0]], [1, -1, 1])
    assert cal.degenerate and cal(np.array([3.0]))[0] == pytest.approx(2 / 3)


# cross-validation ---------------------------------------------------------

FAST_AE = AutoencoderConfig(epochs=200)


def test_loocv_separable(rng):
    X, y = blobs(rng, n=8, gap=8.0, d=12)
    rep = cv.loocv(X, y, cv.TrainerConfig("raw"))
    assert rep.accuracy == 1.0
    assert len(rep.folds) == 16 and sorted(i for f in rep.folds for i in f) == list(range(16))


@pytest.mark.parametrize("feature_type", cv.FEATURE_TYPES)
def test_no_leakage(rng, feature_type):
    X, y = blobs(rng, n=5, gap=4.0, d=12)
    calls = []
    cfg = cv.TrainerConfig(feature_type, autoencoder=FAST_AE, pca_components=2)
    rep = cv.loocv(X, y, cfg, fit_log=lambda stage, rows: calls.append((stage, set(rows.tolist()))))
    stages = {"standardize", "svm"} | ({"autoencoder"} if feature_type in ("latent", "pca") else set()) \
        | ({"pca"} if feature_type in ("pca", "kmeans_pca") else set())
    assert len(calls) == len(stages) * len(y)
    for k, fold in enumerate(rep.folds):
        fold_calls = calls[k * len(stages):(k + 1) * len(stages)]
        assert {s for s, _ in fold_calls} == stages
        for _, rows in fold_calls:
            assert rows.isdisjoint(fold) and rows | set(fold) == set(range(len(y)))


def test_label_shuffle_baseline():
    rng = np.random.default_rng(0)
    X, y = blobs(rng, n=15, gap=3.0, d=12)
    accs = []
    for s in range(20):
        ys = np.random.default_rng(s).permutation(y)
        accs.append(cv.loocv(X, ys, cv.TrainerConfig("raw")).accuracy)
    assert abs(np.mean(accs) - 0.5) <= 0.2


def test_loocv_too_small():
    with pytest.raises(InsufficientDataError):
        cv.loocv(np.zeros((2, 3)), [1, -1])


def test_kfold_equals_loocv_at_k_n(rng):
    X, y = blobs(rng, n=6, gap=2.0, d=12)
    cfg = cv.TrainerConfig("pca", autoencoder=FAST_AE, pca_components=2)
    a = cv.kfold_cv(X, y, k=len(y), config=cfg)
    b = cv.loocv(X, y, cfg)
    assert a.to_json() == b.to_json()
    np.testing.assert_array_equal(a.decision, b.decision)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 40), st.integers(2, 10), st.integers(0, 1000))
def test_stratified_folds_partition(n_pos, k, seed):
    y = np.r_[np.ones(n_pos), -np.ones(n_pos + seed % 3)]
    folds = cv.stratified_folds(y, k, seed)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert sorted(i for f in folds for i in f) == list(range(len(y)))
    assert folds == cv.stratified_folds(y, k, seed)


def test_kfold_small_class_warns(rng):
    X, y = blobs(rng, n=4, gap=4.0, d=3)
    with pytest.warns(UserWarning, match="smallest class"):
        rep = cv.kfold_cv(X, y, k=6)
    assert len(rep.folds) == 4


def test_report_counts(rng):
    X, y = blobs(rng, n=10, gap=1.0, d=12)
    rep = cv.kfold_cv(X, y, k=5, config=cv.TrainerConfig("raw"))
    c = rep.confusion
    assert sum(c.values()) == len(y)
    assert rep.accuracy == (c["tp"] + c["tn"]) / len(y)


def test_sweep_matches_individual_runs(rng):
    X, y = blobs(rng, n=6, gap=1.5, d=12)
    base = cv.TrainerConfig("pca", autoencoder=FAST_AE)
    folds = [[i] for i in range(len(y))]
    sweep = cv.sweep_folds(X, y, folds, base, [("components", 2), ("variance", 0.8)])
    for sel, cfg in (
        (("components", 2), cv.TrainerConfig("pca", autoencoder=FAST_AE, pca_components=2)),
        (("variance", 0.8), cv.TrainerConfig("pca", autoencoder=FAST_AE, pca_variance=0.8)),
    ):
        single = cv.loocv(X, y, cfg)
        np.testing.assert_array_equal(sweep[sel].decision, single.decision)
        assert sweep[sel].cumulative_variance == single.cumulative_variance
