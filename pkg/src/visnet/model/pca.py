from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError, ShapeError


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # rows are orthonormal directions, strongest first
    explained_variance_ratio: np.ndarray
    singular_values: np.ndarray

    def n_for_variance(self, threshold: float) -> int:
        """Smallest k whose cumulative explained-variance ratio reaches threshold."""
        if not 0 < threshold <= 1:
            raise ValueError("variance threshold must lie in (0, 1]")
        cum = np.cumsum(self.explained_variance_ratio)
        # tolerate round-off so that threshold 1.0 is reachable
        hits = np.nonzero(cum >= threshold - 1e-12)[0]
        return int(hits[0]) + 1 if len(hits) else len(self.components)


def fit_pca(latent) -> PCAModel:
    """Mean-centred SVD. Component signs are fixed so that the largest-magnitude
    entry of each component is positive."""
    X = np.asarray(latent, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise PreconditionError("PCA needs at least 2 rows")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=True)
    d = X.shape[1]
    sv = np.zeros(d)
    sv[: len(s)] = s
    # complete the basis when n < d
    comps = vt[:d]
    for r in range(d):
        j = np.argmax(np.abs(comps[r]))
        if comps[r, j] < 0:
            comps[r] = -comps[r]
    total = float((sv**2).sum())
    ratio = sv**2 / total if total > 0 else np.zeros(d)
    return PCAModel(mean, comps, ratio, sv)


def transform_pca(model: PCAModel, X, n_components: int | None = None,
                  variance: float | None = None) -> np.ndarray:
    """Project centred rows onto the leading components.

    Give either a component count or a cumulative-variance threshold.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.mean):
        raise ShapeError(f"expected {len(model.mean)} columns, got shape {X.shape}")
    if (n_components is None) == (variance is None):
        raise ValueError("pass exactly one of n_components or variance")
    k = model.n_for_variance(variance) if variance is not None else n_components
    if not 1 <= k <= len(model.components):
        raise ValueError(f"n_components must lie in 1..{len(model.components)}")
    return (X - model.mean) @ model.components[:k].T
