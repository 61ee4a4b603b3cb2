"""Loading, normalizing, splitting and synthesizing labeled multichannel series."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DegenerateChannelError,
    ParseError,
    PreconditionError,
    ShapeError,
    SpecError,
)

# Per-(session, class) seeds are master_seed * SEED_STRIDE + unit index.
SEED_STRIDE = 1_000_003


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """N channels x M timepoints, with optional per-timepoint class tags."""

    values: np.ndarray
    channel_ids: tuple
    timepoint_labels: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError(f"expected a 2-D matrix, got shape {values.shape}")
        n, m = values.shape
        # M >= 2 is enforced by the operations that need it; a class observed
        # at a single timepoint is still a valid split result
        if n < 1 or m < 1:
            raise ShapeError(f"need N >= 1 channels and M >= 1 timepoints, got {n}x{m}")
        if not np.all(np.isfinite(values)):
            bad = int(np.nonzero(~np.all(np.isfinite(values), axis=1))[0][0])
            raise ParseError(f"non-finite entry in channel row {bad}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        ids = tuple(str(c) for c in self.channel_ids)
        if len(ids) != n:
            raise ShapeError(f"{len(ids)} channel ids for {n} rows")
        object.__setattr__(self, "channel_ids", ids)

        if self.timepoint_labels is not None:
            labels = tuple(str(t) for t in self.timepoint_labels)
            if len(labels) != m:
                raise ShapeError(f"{len(labels)} timepoint labels for M={m} timepoints")
            object.__setattr__(self, "timepoint_labels", labels)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_timepoints(self) -> int:
        return self.values.shape[1]

    def with_values(self, values) -> "TimeSeriesMatrix":
        return TimeSeriesMatrix(values, self.channel_ids, self.timepoint_labels)

    def drop_channels(self, names) -> "TimeSeriesMatrix":
        keep = [i for i, c in enumerate(self.channel_ids) if c not in set(names)]
        return TimeSeriesMatrix(
            self.values[keep], [self.channel_ids[i] for i in keep], self.timepoint_labels
        )


def load_time_series(path, labels_path=None) -> TimeSeriesMatrix:
    """Read a channel-per-row CSV (first cell is the channel id).

    An optional labels file holds one comma-separated line of M class tags.
    """
    path = Path(path)
    ids, rows = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            ids.append(row[0].strip())
            try:
                rows.append([float(cell) for cell in row[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno} ({row[0]!r}): {exc}") from None
            if len(rows[-1]) != len(rows[0]):
                raise ShapeError(
                    f"{path}: row {lineno} ({row[0]!r}) has {len(rows[-1])} values, "
                    f"expected {len(rows[0])}"
                )
    if not rows:
        raise ParseError(f"{path}: no data rows")

    labels = None
    if labels_path is not None:
        labels = read_labels(labels_path)
        if len(labels) != len(rows[0]):
            raise ShapeError(
                f"{labels_path}: {len(labels)} labels but {path} has M={len(rows[0])} timepoints"
            )
    return TimeSeriesMatrix(np.array(rows, dtype=float), ids, labels)


def read_labels(path) -> list:
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        return []
    return [tag.strip() for tag in text.split(",")]


def write_time_series(series: TimeSeriesMatrix, path, labels_path=None) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for cid, row in zip(series.channel_ids, series.values):
            writer.writerow([cid] + [repr(float(v)) for v in row])
    if labels_path is not None:
        if series.timepoint_labels is None:
            raise PreconditionError("series has no timepoint labels to write")
        Path(labels_path).write_text(",".join(series.timepoint_labels) + "\n", encoding="utf-8")


def detrend(series: TimeSeriesMatrix) -> TimeSeriesMatrix:
    """Subtract each channel's least-squares line over the timepoint index."""
    m = series.n_timepoints
    if m < 2:
        raise ShapeError("detrend needs at least 2 timepoints")
    t = np.arange(m, dtype=float)
    tc = t - t.mean()
    x = series.values
    slope = (x - x.mean(axis=1, keepdims=True)) @ tc / (tc @ tc)
    resid = x - x.mean(axis=1, keepdims=True) - np.outer(slope, tc)
    return series.with_values(resid)


def degenerate_channels(series: TimeSeriesMatrix, atol: float = 1e-12) -> list:
    """Channel ids whose population standard deviation is (numerically) zero."""
    x = series.values
    scale = np.maximum(np.abs(x).max(axis=1), 1.0)
    sd = x.std(axis=1)
    return [series.channel_ids[i] for i in np.nonzero(sd <= atol * scale)[0]]


def zscore(series: TimeSeriesMatrix) -> TimeSeriesMatrix:
    """Center each channel and divide by its population standard deviation."""
    bad = degenerate_channels(series)
    if bad:
        raise DegenerateChannelError(bad[0])
    x = series.values
    centered = x - x.mean(axis=1, keepdims=True)
    z = centered / centered.std(axis=1, keepdims=True)
    # second pass removes the O(eps) residual mean left by the division
    z = z - z.mean(axis=1, keepdims=True)
    return series.with_values(z)


def split_by_class(series: TimeSeriesMatrix) -> dict:
    """Partition columns by timepoint label, keeping column order.

    Keys appear in order of first occurrence.
    """
    if series.timepoint_labels is None:
        raise PreconditionError("split_by_class requires timepoint labels")
    labels = np.array(series.timepoint_labels)
    out = {}
    for tag in dict.fromkeys(series.timepoint_labels):
        cols = np.nonzero(labels == tag)[0]
        sub = series.values[:, cols]
        out[tag] = TimeSeriesMatrix(sub, series.channel_ids, [tag] * len(cols))
    return out


def synth_toy_three_node(a1: float, a2: float, sigma: float, M: int, seed: int) -> TimeSeriesMatrix:
    """Confounded three-node model: P driver, Q = a1 P + e1, R = a2 P + e2.

    P is standard normal; the noise terms have standard deviation `sigma`.
    """
    if M < 10:
        raise PreconditionError("toy model needs M >= 10")
    if sigma <= 0:
        raise PreconditionError("sigma must be positive")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((3, M))
    p = z[0]
    q = a1 * p + sigma * z[1]
    r = a2 * p + sigma * z[2]
    return TimeSeriesMatrix(np.vstack([p, q, r]), ["P", "Q", "R"])


@dataclass(frozen=True)
class ClassStructure:
    """Planted conditional-dependence pattern for one class.

    kind is one of "chain", "ring", "cliques", "star", "random" or "explicit".
    `strength` is the magnitude of the off-diagonal precision entries
    (negative entries, so planted partial correlations are positive).
    """

    tag: str
    kind: str
    strength: float = 0.4
    size: int = 0
    density: float = 0.1
    edges: tuple = ()


@dataclass(frozen=True)
class SyntheticSpec:
    n_classes: int
    channels: int
    timepoints_per_class: int
    precision_seed: int = 0
    noise_sigma: float = 1.0
    class_structure: tuple = ()
    gaussian_mean: Optional[tuple] = None

    def validate(self) -> None:
        if self.n_classes < 1 or self.channels < 2 or self.timepoints_per_class < 2:
            raise SpecError("need n_classes >= 1, channels >= 2, timepoints_per_class >= 2")
        if self.noise_sigma <= 0:
            raise SpecError("noise_sigma must be positive")
        if len(self.class_structure) != self.n_classes:
            raise SpecError(
                f"{len(self.class_structure)} class structures for {self.n_classes} classes"
            )
        if self.gaussian_mean is not None and len(self.gaussian_mean) != self.channels:
            raise SpecError("gaussian_mean length must equal channels")
        tags = [c.tag for c in self.class_structure]
        if len(set(tags)) != len(tags):
            raise SpecError("class tags must be unique")

    def precisions(self) -> list:
        self.validate()
        mats = [planted_precision(self, k) for k in range(self.n_classes)]
        patterns = [tuple(map(tuple, np.argwhere(np.triu(m, 1) != 0))) for m in mats]
        if len(set(patterns)) != len(patterns):
            raise SpecError("classes must have distinct off-diagonal sparsity patterns")
        return mats


def _pattern_edges(cs: ClassStructure, n: int, rng: np.random.Generator) -> list:
    size = cs.size or n
    if size > n:
        raise SpecError(f"class {cs.tag!r}: pattern size {size} exceeds {n} channels")
    nodes = rng.permutation(n)[:size]
    kind = cs.kind
    if kind == "explicit":
        return [(int(i), int(j)) for i, j, *_ in cs.edges]
    if kind == "chain":
        return [(nodes[k], nodes[k + 1]) for k in range(size - 1)]
    if kind == "ring":
        return [(nodes[k], nodes[(k + 1) % size]) for k in range(size)]
    if kind == "cliques":
        # disjoint triangles
        out = []
        for k in range(0, size - 2, 3):
            a, b, c = nodes[k : k + 3]
            out += [(a, b), (b, c), (a, c)]
        return out
    if kind == "star":
        hub = nodes[0]
        return [(hub, v) for v in nodes[1:]]
    if kind == "random":
        iu = np.triu_indices(size, 1)
        mask = rng.random(len(iu[0])) < cs.density
        return [(nodes[i], nodes[j]) for i, j in zip(iu[0][mask], iu[1][mask])]
    raise SpecError(f"unknown class structure kind {kind!r}")


def planted_precision(spec: SyntheticSpec, class_index: int) -> np.ndarray:
    """Sparse symmetric positive-definite precision matrix for one class.

    The unit diagonal is inflated until the matrix is diagonally dominant.
    """
    n = spec.channels
    cs = spec.class_structure[class_index]
    rng = np.random.default_rng(spec.precision_seed * SEED_STRIDE + class_index)
    omega = np.zeros((n, n))
    explicit = {(min(int(i), int(j)), max(int(i), int(j))): w for i, j, *w in cs.edges}
    for i, j in _pattern_edges(cs, n, rng):
        i, j = int(i), int(j)
        if i == j:
            continue
        w = explicit.get((min(i, j), max(i, j)), [cs.strength])
        w = w[0] if w else cs.strength
        omega[i, j] = omega[j, i] = -float(w)
    offsum = np.abs(omega).sum(axis=1)
    np.fill_diagonal(omega, np.maximum(1.0, offsum + 0.05))
    if np.linalg.eigvalsh(omega)[0] <= 0:
        raise SpecError(f"class {cs.tag!r}: planted precision is not positive definite")
    return omega


def sample_gaussian(precision: np.ndarray, M: int, rng: np.random.Generator,
                    mean=None, sigma: float = 1.0) -> np.ndarray:
    """Draw M columns from N(mean, sigma^2 * precision^-1)."""
    try:
        chol = np.linalg.cholesky(precision)
    except np.linalg.LinAlgError:
        raise SpecError("planted precision is not positive definite") from None
    z = rng.standard_normal((precision.shape[0], M))
    # precision = L L^T  =>  L^{-T} z has covariance precision^{-1}
    x = solve_triangular(chol.T, z, lower=False)
    x = sigma * x
    if mean is not None:
        x = x + np.asarray(mean, dtype=float)[:, None]
    return x


def synth_class_dataset(spec: SyntheticSpec, sessions: int, seed: int) -> list:
    """Sample one labeled matrix per (session, class).

    Returns a list of (session_id, class_tag, TimeSeriesMatrix) ordered by
    session then class.
    """
    if sessions < 2:
        raise PreconditionError("need at least 2 sessions")
    precisions = spec.precisions()
    ids = [f"ch{c:03d}" for c in range(spec.channels)]
    out = []
    for s in range(sessions):
        for k, cs in enumerate(spec.class_structure):
            unit = s * spec.n_classes + k
            rng = np.random.default_rng(seed * SEED_STRIDE + unit)
            x = sample_gaussian(
                precisions[k], spec.timepoints_per_class, rng, spec.gaussian_mean, spec.noise_sigma
            )
            sid = f"ses-{s + 1:02d}"
            out.append((sid, cs.tag, TimeSeriesMatrix(x, ids, [cs.tag] * x.shape[1])))
    return out


def default_synthetic_spec(channels: int = 30, timepoints: int = 300,
                           precision_seed: int = 0, n_classes: int = 3) -> SyntheticSpec:
    """Classes with topologically different planted patterns: a long loop,
    a handful of triangles, and dense weak coupling of every pair."""
    half = max(3, channels // 2)
    palette = [
        ClassStructure("A", "ring", strength=0.45, size=half),
        ClassStructure("B", "cliques", strength=0.45, size=half),
        ClassStructure("C", "random", strength=0.03, density=1.0),
        ClassStructure("D", "chain", strength=0.45),
        ClassStructure("E", "star", strength=0.3, size=min(10, channels)),
    ]
    if not 1 <= n_classes <= len(palette):
        raise SpecError(f"default spec supports 1..{len(palette)} classes")
    return SyntheticSpec(
        n_classes=n_classes,
        channels=channels,
        timepoints_per_class=timepoints,
        precision_seed=precision_seed,
        noise_sigma=1.0,
        class_structure=tuple(palette[:n_classes]),
    )
