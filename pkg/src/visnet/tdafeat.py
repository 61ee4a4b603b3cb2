"""K-means features of persistence diagrams (the 12-D descriptor)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .persistence import PersistenceDiagram

LABELS = ("less", "moderate", "high")
FEATURE_NAMES = tuple(
    f"dim{d}_{kind}_{lab}" for d in (0, 1) for kind in ("frac", "dist") for lab in LABELS
)


@dataclass
class ClusteredDiagram:
    points: np.ndarray
    assignment: np.ndarray
    centroids: np.ndarray
    labels: dict = field(default_factory=dict)  # cluster index -> label
    inertia_history: list = field(default_factory=list)
    n_iter: int = 0

    @property
    def inertia(self) -> float:
        d = self.points - self.centroids[self.assignment]
        return float((d * d).sum())

    @property
    def k(self) -> int:
        return len(self.centroids)

    def cluster_of(self, label: str):
        for idx, lab in self.labels.items():
            if lab == label:
                return idx
        return None


def _sqdist(points, centroids):
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeanspp(points, k, rng):
    """k-means++ seeding. Candidates are drawn with probability proportional
    to squared distance; exact-zero-distance points are never drawn."""
    n = len(points)
    first = int(rng.integers(n))
    centers = [first]
    d2 = _sqdist(points, points[[first]])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            break
        u = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), u, side="right"))
        idx = min(idx, n - 1)
        while d2[idx] == 0:  # guard against float edge at the cumsum boundary
            idx -= 1
        centers.append(idx)
        d2 = np.minimum(d2, _sqdist(points, points[[idx]])[:, 0])
    return points[centers].copy()


def _lloyd(pts, centroids, max_iter, tol):
    history = []
    assignment = np.argmin(_sqdist(pts, centroids), axis=1)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new = centroids.copy()
        for c in range(len(centroids)):
            members = pts[assignment == c]
            if len(members):
                new[c] = members.mean(axis=0)
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        d2 = _sqdist(pts, centroids)
        assignment = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(pts)), assignment].sum()))
        if shift < tol:
            break
    # final centroids are the means of the final assignment
    for c in range(len(centroids)):
        members = pts[assignment == c]
        if len(members):
            centroids[c] = members.mean(axis=0)
    return ClusteredDiagram(pts, assignment, centroids, {}, history, n_iter)


def kmeans(points, K: int = 3, seed: int = 0, max_iter: int = 100, tol: float = 1e-6,
           n_init: int = 10):
    """Lloyd's algorithm from k-means++ seeds, best of ``n_init`` restarts.

    Effective K is min(K, number of distinct points). Ties in assignment go
    to the lower centroid index, ties in final inertia to the earlier
    restart. Returns None for an empty input.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return None
    if K < 1:
        raise ValueError("K must be >= 1")
    k_eff = min(K, len(np.unique(pts, axis=0)))
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        run = _lloyd(pts, _kmeanspp(pts, k_eff, rng), max_iter, tol)
        if best is None or run.inertia < best.inertia:
            best = run
    return best


def label_clusters_by_persistence(clustered: ClusteredDiagram, dimension: int = 0) -> ClusteredDiagram:
    """Rank clusters by mean |death - birth| and name them less/moderate/high.

    With fewer than three clusters, names are handed out from "less" upward.
    ``dimension`` is accepted for symmetry; the absolute gap covers both the
    ordinary (death >= birth) and extended (birth >= death) cases.
    """
    means = []
    for c in range(clustered.k):
        members = clustered.points[clustered.assignment == c]
        if len(members):
            means.append(float(np.abs(members[:, 1] - members[:, 0]).mean()))
        else:
            means.append(math.inf)  # empty clusters rank last
    order = sorted(range(clustered.k), key=lambda c: (means[c], c))
    clustered.labels = {c: LABELS[r] for r, c in enumerate(order[: len(LABELS)])}
    return clustered


def diagram_features(points, K: int = 3, seed: int = 0) -> np.ndarray:
    """(frac_less, frac_moderate, frac_high, dist_less, dist_moderate, dist_high)."""
    out = np.zeros(6)
    cd = kmeans(points, K, seed)
    if cd is None:
        return out
    label_clusters_by_persistence(cd)
    n = len(cd.points)
    for r, lab in enumerate(LABELS):
        c = cd.cluster_of(lab)
        if c is None:
            continue
        size = int((cd.assignment == c).sum())
        if size == 0:
            continue
        b, d = cd.centroids[c]
        out[r] = size / n
        out[3 + r] = abs(d - b) / math.sqrt(2)
    return out


def topo_feature_vector(dg0: PersistenceDiagram, exdg1: PersistenceDiagram, seed: int = 0,
                        K: int = 3, keep_diagonal: bool = False,
                        cap_essential=None) -> np.ndarray:
    """Concatenate the dim-0 and dim-1 sextets into the 12-D vector.

    Essential dim-0 points are excluded unless ``cap_essential`` gives a
    finite death value to substitute.
    """
    p0 = dg0.points(0, keep_diagonal=keep_diagonal,
                    keep_essential=cap_essential is not None, cap=cap_essential)
    p1 = exdg1.points(1, keep_diagonal=keep_diagonal)
    return np.concatenate([diagram_features(p0, K, seed), diagram_features(p1, K, seed)])


def write_features_csv(rows, path) -> None:
    """rows: iterable of (network_id, class_tag, 12-vector)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["network_id", "class"] + list(FEATURE_NAMES))
        for nid, tag, vec in rows:
            w.writerow([nid, tag] + [repr(float(v)) for v in vec])


def read_features_csv(path):
    """Return (ids, tags, X) from a features CSV written by write_features_csv."""
    from .errors import ParseError

    ids, tags, rows = [], [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["network_id", "class"] + list(FEATURE_NAMES):
            raise ParseError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 14:
                raise ParseError(f"{path}: row {lineno} has {len(row)} fields, expected 14")
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from None
            ids.append(row[0])
            tags.append(row[1])
    return ids, tags, np.array(rows, dtype=float).reshape(-1, 12)
