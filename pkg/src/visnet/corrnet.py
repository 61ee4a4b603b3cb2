"""Marginal and partial correlation, and the both-positive visual network."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateChannelError,
    NumericalDegeneracyError,
    OracleInapplicableError,
    ShapeError,
)
from .ingest import TimeSeriesMatrix, degenerate_channels

DEFAULT_REL_TOL = 1e-10


@dataclass(frozen=True)
class CorrelationMatrix:
    kind: str  # "marginal" | "partial"
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n, "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj) -> "CorrelationMatrix":
        values = np.asarray(obj["values"], dtype=float)
        if values.shape != (obj["n"], obj["n"]):
            raise ShapeError(f"correlation matrix declares n={obj['n']} but has shape {values.shape}")
        if obj["kind"] not in ("marginal", "partial"):
            raise ShapeError(f"unknown correlation kind {obj['kind']!r}")
        return cls(obj["kind"], values)


@dataclass(frozen=True)
class VisualNetwork:
    """Weighted undirected graph; edges are (i, j, w) with i < j and w > 0."""

    vertices: tuple
    edges: tuple

    def __post_init__(self):
        seen = set()
        n = len(self.vertices)
        for i, j, w in self.edges:
            if not (0 <= i < j < n):
                raise ShapeError(f"edge ({i}, {j}) must satisfy 0 <= i < j < {n}")
            if not w > 0:
                raise ShapeError(f"edge ({i}, {j}) has non-positive weight {w}")
            if (i, j) in seen:
                raise ShapeError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [[int(i), int(j), float(w)] for i, j, w in self.edges],
        }

    @classmethod
    def from_json(cls, obj) -> "VisualNetwork":
        for key in ("vertices", "edges"):
            if key not in obj:
                raise ShapeError(f"network JSON missing field {key!r}")
        edges = tuple((int(i), int(j), float(w)) for i, j, w in obj["edges"])
        return cls(tuple(obj["vertices"]), edges)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "VisualNetwork":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def sample_covariance(series: TimeSeriesMatrix) -> np.ndarray:
    """Unbiased (divisor M - 1) covariance between channels."""
    x = series.values
    m = x.shape[1]
    if m < 2:
        raise ShapeError("covariance needs at least 2 timepoints")
    xc = x - x.mean(axis=1, keepdims=True)
    cov = xc @ xc.T / (m - 1)
    return (cov + cov.T) / 2


def _check_nonconstant(series: TimeSeriesMatrix) -> None:
    bad = degenerate_channels(series)
    if bad:
        raise DegenerateChannelError(bad[0])


def marginal_correlation(series: TimeSeriesMatrix) -> CorrelationMatrix:
    """Zero-lag Pearson correlation between every pair of channels."""
    _check_nonconstant(series)
    cov = sample_covariance(series)
    sd = np.sqrt(np.diag(cov))
    r = cov / np.outer(sd, sd)
    r = np.clip((r + r.T) / 2, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return CorrelationMatrix("marginal", r)


def moore_penrose_pinv(matrix, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Pseudo-inverse from the SVD, discarding singular values below
    ``rel_tol * largest``."""
    a = np.asarray(matrix, dtype=float)
    if a.size == 0:
        return a.T.copy()
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0:
        return np.zeros(a.T.shape)
    keep = s > rel_tol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T


def partial_correlation(series: TimeSeriesMatrix, rel_tol: float = DEFAULT_REL_TOL) -> CorrelationMatrix:
    """Partial correlation from the pseudo-inverted sample covariance.

    rho_ij = -omega_ij / sqrt(omega_ii * omega_jj); the diagonal is reported
    as 1.
    """
    if series.n_channels < 2:
        raise ShapeError("partial correlation needs at least 2 channels")
    _check_nonconstant(series)
    omega = moore_penrose_pinv(sample_covariance(series), rel_tol)
    omega = (omega + omega.T) / 2
    diag = np.diag(omega)
    if np.any(diag <= 0):
        raise NumericalDegeneracyError(int(np.nonzero(diag <= 0)[0][0]))
    d = np.sqrt(diag)
    rho = -omega / np.outer(d, d)
    rho = np.clip(rho, -1.0, 1.0)
    np.fill_diagonal(rho, 1.0)
    return CorrelationMatrix("partial", rho)


def partial_correlation_regression_oracle(series: TimeSeriesMatrix) -> CorrelationMatrix:
    """Partial correlation as the correlation of regression residuals.

    For every pair, both channels are regressed (with intercept) on all
    remaining channels and the residuals are correlated. Slow, and refuses
    rank-deficient conditioning sets.
    """
    _check_nonconstant(series)
    x = series.values
    n, m = x.shape
    rho = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            others = [k for k in range(n) if k not in (i, j)]
            design = np.column_stack([np.ones(m), x[others].T])
            rank = np.linalg.matrix_rank(design)
            if rank < design.shape[1]:
                raise OracleInapplicableError(
                    f"conditioning set for ({i}, {j}) is rank deficient "
                    f"(rank {rank} < {design.shape[1]})"
                )
            coef, *_ = np.linalg.lstsq(design, x[[i, j]].T, rcond=None)
            resid = x[[i, j]].T - design @ coef
            ri, rj = resid[:, 0] - resid[:, 0].mean(), resid[:, 1] - resid[:, 1].mean()
            rho[i, j] = rho[j, i] = (ri @ rj) / np.sqrt((ri @ ri) * (rj @ rj))
    return CorrelationMatrix("partial", rho)


def build_visual_network(marginal: CorrelationMatrix, partial: CorrelationMatrix,
                         vertices=None) -> VisualNetwork:
    """Keep edge (i, j) iff both correlations are strictly positive.

    The retained weight is the partial correlation.
    """
    if marginal.kind != "marginal" or partial.kind != "partial":
        raise ShapeError("expected a marginal and a partial correlation matrix")
    if marginal.values.shape != partial.values.shape:
        raise ShapeError(
            f"dimension mismatch: {marginal.values.shape} vs {partial.values.shape}"
        )
    n = marginal.n
    if vertices is None:
        vertices = [str(i) for i in range(n)]
    if len(vertices) != n:
        raise ShapeError(f"{len(vertices)} vertex names for n={n}")
    iu, ju = np.triu_indices(n, 1)
    keep = (marginal.values[iu, ju] > 0) & (partial.values[iu, ju] > 0)
    edges = tuple(
        (int(i), int(j), float(partial.values[i, j])) for i, j in zip(iu[keep], ju[keep])
    )
    return VisualNetwork(tuple(vertices), edges)
