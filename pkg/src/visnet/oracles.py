"""Randomized equivalence suites shared by ``oracle-check`` and the tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import corrnet, persistence
from .corrnet import VisualNetwork
from .ingest import TimeSeriesMatrix


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def line(self) -> str:
        return f"{self.name}: {self.passed} passed, {self.failed} failed"


def random_network(rng: np.random.Generator, max_vertices: int = 12, max_edges: int = 20,
                   connected: bool = True) -> VisualNetwork:
    """Random graph with distinct positive weights.

    A random spanning tree comes first when ``connected``; extra edges are
    drawn uniformly from the remaining pairs.
    """
    n = int(rng.integers(2, max_vertices + 1))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = set()
    if connected:
        perm = rng.permutation(n)
        for k in range(1, n):
            a, b = int(perm[k]), int(perm[rng.integers(k)])
            chosen.add((min(a, b), max(a, b)))
    limit = min(max_edges, len(pairs))
    rest = [p for p in pairs if p not in chosen]
    extra = int(rng.integers(0, max(0, limit - len(chosen)) + 1))
    for idx in rng.permutation(len(rest))[:extra]:
        chosen.add(rest[idx])
    edges = sorted(chosen)
    weights = rng.permutation(len(edges)) + 1 + rng.random(len(edges)) * 0.5
    return VisualNetwork(
        tuple(f"v{i}" for i in range(n)),
        tuple((i, j, float(w)) for (i, j), w in zip(edges, weights)),
    )


def persistence_suite(n_graphs: int = 100, seed: int = 0, max_vertices: int = 12,
                      max_edges: int = 20) -> SuiteResult:
    """Union-find dim-0 against the reduction dim-0, plus cardinality identities."""
    res = SuiteResult("persistence")
    rng = np.random.default_rng(seed)
    for g in range(n_graphs):
        fg = persistence.build_filtration(random_network(rng, max_vertices, max_edges))
        uf = persistence.compute_dg0(fg)
        oracle = persistence.extended_persistence_oracle(fg)
        problems = []
        if persistence.diagram_multiset(uf.dim0) != persistence.diagram_multiset(oracle.dim0):
            problems.append("dim0 mismatch")
        try:
            persistence.check_cardinalities(fg, persistence.PersistenceDiagram(uf.dim0, oracle.dim1))
        except Exception as exc:  # noqa: BLE001 - recorded as a failure
            problems.append(str(exc))
        if problems:
            res.failed += 1
            res.failures.append((g, problems))
        else:
            res.passed += 1
    return res


def partial_correlation_suite(n_datasets: int = 50, seed: int = 0, max_channels: int = 8,
                              timepoints: int = 200, atol: float = 1e-8) -> SuiteResult:
    """Precision-matrix partial correlation against the regression oracle."""
    res = SuiteResult("partial-correlation")
    rng = np.random.default_rng(seed)
    for d in range(n_datasets):
        n = int(rng.integers(3, max_channels + 1))
        mix = rng.normal(size=(n, n))
        x = mix @ rng.normal(size=(n, timepoints))
        series = TimeSeriesMatrix(x, [f"c{i}" for i in range(n)])
        fast = corrnet.partial_correlation(series).values
        slow = corrnet.partial_correlation_regression_oracle(series).values
        err = float(np.max(np.abs(fast - slow)))
        if err <= atol:
            res.passed += 1
        else:
            res.failed += 1
            res.failures.append((d, err))
    return res
