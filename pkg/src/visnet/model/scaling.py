from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray
    constant: np.ndarray  # bool mask of columns passed through untouched

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = (X - self.mean) / self.scale
        out[:, self.constant] = X[:, self.constant]
        return out


def standardize_features(X, atol: float = 1e-12):
    """Per-column mean 0 and population std 1.

    Constant columns are left as they are and flagged in ``scaler.constant``.
    Returns ``(X_std, scaler)``.
    """
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    constant = sd <= atol * np.maximum(1.0, np.abs(X).max(axis=0, initial=0.0))
    scale = np.where(constant, 1.0, sd)
    mean = np.where(constant, 0.0, mean)
    scaler = Scaler(mean, scale, constant)
    return scaler.transform(X), scaler
