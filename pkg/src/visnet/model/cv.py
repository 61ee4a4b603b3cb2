"""Cross-validation of the full feature pipeline without leakage.

Every fitted stage (scaler, autoencoder, PCA, SVM) sees only the training
rows of its fold. An optional ``fit_log(stage, row_indices)`` hook receives
the global indices each stage was fitted on, which is how the tests check
for leakage.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InsufficientDataError, LabelError
from ..ingest import SEED_STRIDE
from .autoencoder import AutoencoderConfig, encode, train_autoencoder
from .metrics import compute_metrics
from .pca import fit_pca, transform_pca
from .scaling import standardize_features
from .svm import KernelSpec, decision_function, train_svm

FEATURE_TYPES = ("raw", "latent", "pca", "kmeans_pca")


@dataclass
class TrainerConfig:
    """What to fit inside each fold.

    feature_type: "raw" (standardized 12-D), "latent" (autoencoder code),
    "pca" (PCA of the autoencoder code) or "kmeans_pca" (PCA of the raw
    features, no autoencoder).
    """

    feature_type: str = "pca"
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("rbf"))
    C: float = 1.0
    tol: float = 1e-3
    autoencoder: AutoencoderConfig = field(default_factory=AutoencoderConfig)
    pca_components: int | None = None
    pca_variance: float | None = None

    def __post_init__(self):
        if self.feature_type not in FEATURE_TYPES:
            raise ValueError(f"feature_type must be one of {FEATURE_TYPES}")


@dataclass
class FittedPipeline:
    config: TrainerConfig
    scaler: object
    autoencoder: object = None
    pca: object = None
    svm: object = None
    n_components: int | None = None

    def features(self, X) -> np.ndarray:
        Z = self.scaler.transform(X)
        if self.autoencoder is not None:
            Z = encode(self.autoencoder, Z)
        if self.pca is not None:
            Z = transform_pca(self.pca, Z, n_components=self.n_components)
        return Z

    def decision_function(self, X) -> np.ndarray:
        return decision_function(self.svm, self.features(X))

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1.0, -1.0)


def _fit_embedding(X, config: TrainerConfig, rows, log) -> tuple:
    Z, scaler = standardize_features(X)
    log("standardize", rows)
    fitted = FittedPipeline(config, scaler)
    if config.feature_type in ("latent", "pca"):
        fitted.autoencoder = train_autoencoder(Z, config.autoencoder)
        log("autoencoder", rows)
        Z = encode(fitted.autoencoder, Z)
    if config.feature_type in ("pca", "kmeans_pca"):
        fitted.pca = fit_pca(Z)
        log("pca", rows)
    return fitted, Z


def _components(fitted: FittedPipeline, selector) -> int | None:
    if fitted.pca is None:
        return None
    kind, value = selector
    if kind == "variance":
        return fitted.pca.n_for_variance(value)
    return value or len(fitted.pca.components)


def _selector(config: TrainerConfig):
    if config.pca_variance is not None:
        return ("variance", config.pca_variance)
    return ("components", config.pca_components)


def _fit_head(fitted: FittedPipeline, Z, y, selector, rows, log) -> FittedPipeline:
    head = replace(fitted, n_components=_components(fitted, selector))
    if head.pca is not None:
        Z = transform_pca(head.pca, Z, n_components=head.n_components)
    cfg = head.config
    head.svm = train_svm(Z, y, cfg.kernel, cfg.C, cfg.tol)
    log("svm", rows)
    return head


def fit_pipeline(X, y, config: TrainerConfig, rows=None, fit_log=None) -> FittedPipeline:
    """Fit scaler -> [autoencoder] -> [PCA] -> SVM on the given rows."""
    X = np.asarray(X, dtype=float)
    rows = np.arange(len(X)) if rows is None else np.asarray(rows)
    log = fit_log or (lambda stage, idx: None)
    fitted, Z = _fit_embedding(X, config, rows, log)
    return _fit_head(fitted, Z, y, _selector(config), rows, log)


@dataclass
class CVReport:
    y_true: np.ndarray
    y_pred: np.ndarray
    decision: np.ndarray
    folds: list
    confusion: dict
    per_class: dict
    accuracy: float
    flags: list = field(default_factory=list)
    cumulative_variance: float | None = None  # mean over folds, PCA paths only
    n_components: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n": int(len(self.y_true)),
            "n_folds": len(self.folds),
            "accuracy": self.accuracy,
            "confusion": self.confusion,
            "per_class": self.per_class,
            "flags": self.flags,
            "cumulative_variance": self.cumulative_variance,
        }


def _fold_config(config: TrainerConfig, test_rows) -> TrainerConfig:
    # the autoencoder stream is keyed on the held-out rows, so a fold gets the
    # same seed whichever protocol produced it
    key = int(min(test_rows))
    ae = replace(config.autoencoder, seed=config.autoencoder.seed * SEED_STRIDE + key)
    return replace(config, autoencoder=ae)


def _check_labels(y):
    y = np.asarray(y, dtype=float)
    if not set(np.unique(y)) <= {-1.0, 1.0} or len(np.unique(y)) < 2:
        raise LabelError("cross-validation needs +1/-1 labels with both classes present")
    return y


def run_folds(X, y, folds, config: TrainerConfig, fit_log=None) -> CVReport:
    return sweep_folds(X, y, folds, config, [_selector(config)], fit_log)[_selector(config)]


def sweep_folds(X, y, folds, config: TrainerConfig, selectors, fit_log=None) -> dict:
    """Cross-validate several PCA selectors at once.

    Selectors are ("components", k) or ("variance", v). Scaler, autoencoder
    and PCA are fitted once per fold and shared; one SVM is trained per
    selector. Returns selector -> CVReport.
    """
    X = np.asarray(X, dtype=float)
    y = _check_labels(y)
    n = len(y)
    log = fit_log or (lambda stage, idx: None)
    selectors = list(selectors)
    pred = {s: np.zeros(n) for s in selectors}
    dec = {s: np.zeros(n) for s in selectors}
    cumvar = {s: [] for s in selectors}
    ncomp = {s: [] for s in selectors}
    for test in folds:
        test = np.asarray(test)
        train = np.setdiff1d(np.arange(n), test)
        if len(np.unique(y[train])) < 2:
            raise InsufficientDataError(f"fold holding out rows {test.tolist()} leaves one class")
        fitted, Z = _fit_embedding(X[train], _fold_config(config, test), train, log)
        for sel in selectors:
            head = _fit_head(fitted, Z, y[train], sel, train, log)
            dec[sel][test] = head.decision_function(X[test])
            pred[sel][test] = np.where(dec[sel][test] >= 0, 1.0, -1.0)
            if head.pca is not None:
                k = head.n_components
                ncomp[sel].append(k)
                cumvar[sel].append(float(np.sum(head.pca.explained_variance_ratio[:k])))
    out = {}
    for sel in selectors:
        report = summarize(y, pred[sel], dec[sel], [np.asarray(f).tolist() for f in folds])
        if cumvar[sel]:
            report.cumulative_variance = float(np.mean(cumvar[sel]))
            report.n_components = ncomp[sel]
        out[sel] = report
    return out


def summarize(y_true, y_pred, decision, folds) -> CVReport:
    tp = int(np.sum((y_pred > 0) & (y_true > 0)))
    fp = int(np.sum((y_pred > 0) & (y_true < 0)))
    fn = int(np.sum((y_pred < 0) & (y_true > 0)))
    tn = int(np.sum((y_pred < 0) & (y_true < 0)))
    pos = compute_metrics(tp, fp, fn, tn)
    neg = compute_metrics(tn, fn, fp, tp)
    flags = [f"+1 {m}" for m in pos.pop("flags")] + [f"-1 {m}" for m in neg.pop("flags")]
    accuracy = pos["accuracy"]
    per_class = {
        "+1": {k: pos[k] for k in ("precision", "recall", "f1")},
        "-1": {k: neg[k] for k in ("precision", "recall", "f1")},
    }
    return CVReport(
        np.asarray(y_true), np.asarray(y_pred), np.asarray(decision), folds,
        {"tp": tp, "fp": fp, "fn": fn, "tn": tn}, per_class, accuracy, flags,
    )


def loocv(X, y, config: TrainerConfig | None = None, fit_log=None) -> CVReport:
    """Leave-one-out: n folds, each holding out a single row."""
    n = len(y)
    if n < 3:
        raise InsufficientDataError(f"LOOCV needs at least 3 instances, got {n}")
    return run_folds(X, y, [[i] for i in range(n)], config or TrainerConfig(), fit_log)


def stratified_folds(y, k: int, seed: int) -> list:
    """Shuffle each class, then deal rows round-robin into k folds."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    dealt = []
    for label in np.unique(y):
        idx = np.nonzero(y == label)[0]
        dealt.extend(rng.permutation(idx).tolist())
    folds = [[] for _ in range(k)]
    for pos, idx in enumerate(dealt):
        folds[pos % k].append(idx)
    return [sorted(f) for f in folds]


def kfold_cv(X, y, k: int = 10, seed: int = 0, config: TrainerConfig | None = None,
             fit_log=None) -> CVReport:
    """Stratified k-fold. k >= n degenerates to leave-one-out; a class smaller
    than k otherwise shrinks k (with a warning)."""
    y = _check_labels(y)
    n = len(y)
    if n < 3:
        raise InsufficientDataError(f"cross-validation needs at least 3 instances, got {n}")
    if k >= n:
        folds = [[i] for i in range(n)]
    else:
        smallest = int(min(np.sum(y > 0), np.sum(y < 0)))
        if smallest < k:
            warnings.warn(f"smallest class has {smallest} members; using k={max(smallest, 2)}")
            k = max(smallest, 2)
        folds = stratified_folds(y, k, seed)
    return run_folds(X, y, folds, config or TrainerConfig(feature_type="raw"), fit_log)
