"""Soft-margin kernel SVM trained by sequential minimal optimization.

Working-set selection uses second-order information (the maximal-gain
partner for the most violating index), and training stops once the largest
KKT violation m(alpha) - M(alpha) drops below ``tol``. Training rows are put
in a canonical order first, so the solution does not depend on how the
caller ordered them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import LabelError, ShapeError

TAU = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"  # rbf | poly | linear
    gamma: float | None = None
    degree: int = 3
    coef0: float = 1.0

    def resolve(self, X: np.ndarray) -> "KernelSpec":
        """Fill in a data-dependent gamma: 1 / (d * mean column variance)."""
        if self.gamma is not None or self.kind == "linear":
            return self
        var = float(np.mean(X.var(axis=0))) if X.size else 0.0
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        return KernelSpec(self.kind, gamma, self.degree, self.coef0)

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        if self.kind == "linear":
            return A @ B.T
        if self.kind in ("poly", "polynomial"):
            gamma = 1.0 if self.gamma is None else self.gamma
            return (gamma * (A @ B.T) + self.coef0) ** self.degree
        if self.kind == "rbf":
            sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2 * A @ B.T
            return np.exp(-self.gamma * np.maximum(sq, 0.0))
        raise ValueError(f"unknown kernel {self.kind!r}")


@dataclass
class SVMModel:
    kernel: KernelSpec
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for the support vectors
    bias: float
    C: float
    tol: float
    alpha: np.ndarray  # full alpha vector, canonical training order
    y: np.ndarray  # canonical training order
    X: np.ndarray  # canonical training order
    n_iter: int = 0
    max_violation: float = 0.0
    train_accuracy: float = float("nan")

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def train_svm(X, y, kernel: KernelSpec | None = None, C: float = 1.0, tol: float = 1e-3,
              max_iter: int = 1_000_000) -> SVMModel:
    """Solve the soft-margin dual with SMO. Labels must be +1/-1."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeError(f"X shape {X.shape} incompatible with {len(y)} labels")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise LabelError("labels must be +1 or -1")
    if len(np.unique(y)) < 2:
        raise LabelError("both classes must be present to train an SVM")
    if C <= 0:
        raise ValueError("C must be positive")

    order = np.lexsort(tuple(X[:, c] for c in reversed(range(X.shape[1]))) + (y,))
    # lexsort: last key is primary, so rows are grouped by label then features
    X, y = X[order], y[order]
    kern = (kernel or KernelSpec()).resolve(X)
    K = kern(X, X)
    Q = (y[:, None] * y[None, :]) * K
    diag = np.diag(K).copy()
    n = len(y)
    alpha = np.zeros(n)
    G = -np.ones(n)

    n_iter, gap = 0, np.inf
    while n_iter < max_iter:
        up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
        score = -y * G
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        m_up = score[i]
        m_low = np.min(np.where(low, score, np.inf))
        gap = m_up - m_low
        if gap < tol:
            break
        b = m_up - score
        cand = low & (b > 0)
        a = diag[i] + diag - 2 * y[i] * y * Q[i]  # = K_ii + K_tt - 2 K_it
        a = np.where(a > 0, a, TAU)
        gain = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(gain))
        n_iter += 1

        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] + 2 * Q[i, j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2 * Q[i, j], TAU)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
            elif alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > C:
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total
        G += Q[i] * (alpha[i] - ai) + Q[j] * (alpha[j] - aj)
    else:
        warnings.warn(f"SMO stopped at max_iter={max_iter} with violation {gap:.3g}")

    bias = _bias(alpha, y, G, C)
    sv = alpha > 0
    model = SVMModel(kern, X[sv], (alpha * y)[sv], bias, C, tol, alpha, y, X, n_iter, float(gap))
    model.train_accuracy = float(np.mean(predict_svm(model, X) == y))
    return model


def _bias(alpha, y, G, C):
    free = (alpha > 0) & (alpha < C)
    yG = y * G
    if free.any():
        rho = yG[free].mean()
    else:
        at_upper = alpha >= C
        # bounds on rho from the variables stuck at 0 or C
        ub_mask = ((y < 0) & at_upper) | ((y > 0) & (alpha <= 0))
        lb_mask = ((y > 0) & at_upper) | ((y < 0) & (alpha <= 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = (ub + lb) / 2
        else:
            rho = ub if np.isfinite(ub) else lb
    return float(-rho)


def decision_function(model: SVMModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} features, got {X.shape[1]}")
    if len(model.dual_coef) == 0:
        return np.full(len(X), model.bias)
    return model.kernel(X, model.support_vectors) @ model.dual_coef + model.bias


def predict_svm(model: SVMModel, X) -> np.ndarray:
    """Sign of the decision value; exact zeros go to +1."""
    return np.where(decision_function(model, X) >= 0, 1.0, -1.0)


@dataclass(frozen=True)
class PlattCalibrator:
    A: float
    B: float
    degenerate: bool = False
    prior: float = 0.5

    def __call__(self, decision) -> np.ndarray:
        f = np.asarray(decision, dtype=float)
        if self.degenerate:
            return np.full(f.shape, self.prior)
        return expit(-(self.A * f + self.B))


def platt_calibrate(model: SVMModel, X, y, max_iter: int = 100) -> PlattCalibrator:
    """Fit p(+1 | f) = 1 / (1 + exp(A f + B)) by regularized maximum likelihood
    (Newton steps with backtracking, smoothed targets)."""
    y = np.asarray(y, dtype=float)
    f = decision_function(model, X)
    n_pos = int((y > 0).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise LabelError("Platt calibration needs both classes")
    prior = n_pos / len(y)
    if np.ptp(f) == 0:
        return PlattCalibrator(0.0, 0.0, degenerate=True, prior=prior)
    return _fit_sigmoid(f, y, n_pos, n_neg, max_iter)


def _fit_sigmoid(f, y, n_pos, n_neg, max_iter):
    hi, lo = (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)
    t = np.where(y > 0, hi, lo)
    A, B = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))
    min_step, sigma, eps = 1e-10, 1e-12, 1e-5

    def objective(A, B):
        z = f * A + B
        return float(np.sum(np.logaddexp(0.0, z) - (1 - t) * z))

    fval = objective(A, B)
    for _ in range(max_iter):
        z = f * A + B
        p = expit(-z)
        q = 1 - p
        d2 = p * q
        h11 = sigma + np.sum(f * f * d2)
        h22 = sigma + np.sum(d2)
        h21 = np.sum(f * d2)
        d1 = t - p
        g1, g2 = np.sum(f * d1), np.sum(d1)
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            nA, nB = A + step * dA, B + step * dB
            nf = objective(nA, nB)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step /= 2
        else:
            break
    return PlattCalibrator(float(A), float(B))
