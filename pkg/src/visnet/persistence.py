"""Graph filtrations, 0-dim ordinary and 1-dim extended persistence.

The extended diagram comes from a boundary-matrix reduction over Z/2 of the
coned extended filtration: apex first, then the sublevel pass over the graph,
then cone cells over superlevel sets in descending order. The same reduction
also yields the 0-dim pairs, which is what makes it a usable oracle for the
union-find sweep.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .corrnet import VisualNetwork
from .errors import NumericalError, OracleBoundError

INF = math.inf
DEFAULT_ORACLE_MAX_VERTICES = 512


@dataclass(frozen=True)
class FilteredGraph:
    """Filter values on vertices and edges.

    ``vertex_values[v]`` is the minimum incident edge weight (or the isolated
    value); edges are ``(u, v, f(e))`` with ``u < v``.
    """

    vertex_values: tuple
    edges: tuple
    names: tuple = ()
    isolated_value: float = 0.0

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_values)

    def superlevel_vertex_values(self) -> list:
        """Max incident edge weight per vertex: the entry value of each vertex
        when edges are swept from the top down."""
        top = [None] * self.n_vertices
        for u, v, w in self.edges:
            for x in (u, v):
                if top[x] is None or w > top[x]:
                    top[x] = w
        return [self.isolated_value if t is None else t for t in top]

    def components(self) -> int:
        uf = UnionFind(self.n_vertices)
        for u, v, _ in self.edges:
            uf.union(u, v)
        return len({uf.find(x) for x in range(self.n_vertices)})


@dataclass(frozen=True)
class PersistencePoint:
    birth: float
    death: float
    dimension: int
    essential: bool = False

    @property
    def lifespan(self) -> float:
        return abs(self.death - self.birth)

    @property
    def on_diagonal(self) -> bool:
        return self.birth == self.death


@dataclass(frozen=True)
class PersistenceDiagram:
    dim0: tuple = ()
    dim1: tuple = ()

    def points(self, dimension: int, keep_diagonal: bool = False,
               keep_essential: bool = False, cap: Optional[float] = None) -> list:
        """Finite (birth, death) pairs for one dimension.

        Essential points are dropped unless ``keep_essential``, in which case
        their infinite death is replaced by ``cap``.
        """
        src = self.dim0 if dimension == 0 else self.dim1
        out = []
        for p in src:
            if p.essential:
                if not keep_essential:
                    continue
                if cap is None:
                    raise ValueError("keep_essential requires a finite cap")
                out.append((p.birth, max(cap, p.birth)))
                continue
            if p.on_diagonal and not keep_diagonal:
                continue
            out.append((p.birth, p.death))
        return out

    def to_json(self, keep_diagonal: bool = False) -> dict:
        def enc(p):
            return [p.birth, None if p.essential else p.death]

        dim0 = [enc(p) for p in self.dim0 if keep_diagonal or p.essential or not p.on_diagonal]
        dim1 = [[p.birth, p.death] for p in self.dim1 if keep_diagonal or not p.on_diagonal]
        key = lambda bd: (bd[0], math.inf if bd[1] is None else bd[1])
        return {"dim0": sorted(dim0, key=key), "dim1": sorted(dim1, key=key)}

    @classmethod
    def from_json(cls, obj) -> "PersistenceDiagram":
        dim0 = tuple(
            PersistencePoint(float(b), INF if d is None else float(d), 0, d is None)
            for b, d in obj["dim0"]
        )
        dim1 = tuple(PersistencePoint(float(b), float(d), 1) for b, d in obj["dim1"])
        return cls(dim0, dim1)


class UnionFind:
    """Array union-find with path halving. Roots keep the smallest index,
    which is the oldest element when indices follow filtration order."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return None
        elder, younger = min(ra, rb), max(ra, rb)
        self.parent[younger] = elder
        return elder, younger


def build_filtration(network: VisualNetwork, isolated_value: float = 0.0) -> FilteredGraph:
    """f(e) = w(e); f(v) = min weight of the edges incident on v."""
    n = len(network.vertices)
    vals = [None] * n
    for u, v, w in network.edges:
        for x in (u, v):
            if vals[x] is None or w < vals[x]:
                vals[x] = w
    vals = [isolated_value if x is None else x for x in vals]
    edges = tuple(sorted((min(u, v), max(u, v), float(w)) for u, v, w in network.edges))
    return FilteredGraph(tuple(vals), edges, tuple(network.vertices), isolated_value)


def _sublevel_order(fg: FilteredGraph) -> tuple:
    """Vertex and edge orders for the ascending sweep: by value, vertices
    before edges at ties, then by id."""
    vorder = sorted(range(fg.n_vertices), key=lambda v: (fg.vertex_values[v], v))
    eorder = sorted(range(len(fg.edges)), key=lambda k: (fg.edges[k][2], fg.edges[k][:2]))
    return vorder, eorder


def compute_dg0(fg: FilteredGraph) -> PersistenceDiagram:
    """0-dim ordinary diagram by a union-find sweep with the elder rule."""
    vorder, eorder = _sublevel_order(fg)
    rank = {v: r for r, v in enumerate(vorder)}
    uf = UnionFind(fg.n_vertices)
    points = []
    # merge events are processed in sublevel order; every vertex precedes its
    # incident edges because f(v) <= f(e)
    for k in eorder:
        u, v, w = fg.edges[k]
        merged = uf.union(rank[u], rank[v])
        if merged is not None:
            _, younger = merged
            points.append(PersistencePoint(fg.vertex_values[vorder[younger]], w, 0))
    for r in range(fg.n_vertices):
        if uf.find(r) == r:
            points.append(PersistencePoint(fg.vertex_values[vorder[r]], INF, 0, True))
    return PersistenceDiagram(dim0=tuple(points))


def _reduce(columns: list) -> dict:
    """Standard column reduction over Z/2; columns are int bitmasks.

    Returns pivot row -> column index.
    """
    pivot_of = {}
    for j, col in enumerate(columns):
        while col:
            low = col.bit_length() - 1
            other = pivot_of.get(low)
            if other is None:
                pivot_of[low] = j
                break
            col ^= columns[other]
        columns[j] = col
    return pivot_of


def extended_persistence_oracle(fg: FilteredGraph,
                                max_vertices: int = DEFAULT_ORACLE_MAX_VERTICES) -> PersistenceDiagram:
    """Dg0 and ExDg1 from a full extended-filtration matrix reduction."""
    nv, ne = fg.n_vertices, len(fg.edges)
    if nv > max_vertices:
        raise OracleBoundError(
            f"graph has {nv} vertices, above the oracle bound of {max_vertices}; "
            f"raise oracle_max_vertices to process it"
        )
    vorder, eorder = _sublevel_order(fg)
    top = fg.superlevel_vertex_values()

    # cell kinds: ("apex",), ("v", v), ("e", k), ("cv", v), ("ce", k)
    cells = [("apex",)]
    cells += [("v", v) for v in vorder]
    cells += [("e", k) for k in eorder]
    cone = [((-top[v], 0, v), ("cv", v)) for v in range(nv)]
    cone += [((-fg.edges[k][2], 1, fg.edges[k][:2]), ("ce", k)) for k in range(ne)]
    cone.sort(key=lambda t: t[0])
    cells += [c for _, c in cone]
    index = {c: i for i, c in enumerate(cells)}

    columns = []
    for c in cells:
        kind = c[0]
        if kind in ("apex", "v"):
            columns.append(0)
        elif kind == "e":
            u, v, _ = fg.edges[c[1]]
            columns.append((1 << index[("v", u)]) | (1 << index[("v", v)]))
        elif kind == "cv":
            columns.append(1 | (1 << index[("v", c[1])]))
        else:
            u, v, _ = fg.edges[c[1]]
            columns.append(
                (1 << index[("e", c[1])])
                | (1 << index[("cv", u)])
                | (1 << index[("cv", v)])
            )

    def value(c):
        kind = c[0]
        if kind == "v":
            return fg.vertex_values[c[1]]
        if kind in ("e", "ce"):
            return fg.edges[c[1]][2]
        return top[c[1]]

    dim0, dim1 = [], []
    for row, col in sorted(_reduce(columns).items()):
        birth_cell, death_cell = cells[row], cells[col]
        if birth_cell[0] == "v" and death_cell[0] == "e":
            dim0.append(PersistencePoint(value(birth_cell), value(death_cell), 0))
        elif birth_cell[0] == "v" and death_cell[0] == "cv":
            dim0.append(PersistencePoint(value(birth_cell), INF, 0, True))
        elif birth_cell[0] == "e" and death_cell[0] == "ce":
            dim1.append(PersistencePoint(value(birth_cell), value(death_cell), 1))
        elif birth_cell[0] == "cv" and death_cell[0] == "ce":
            continue  # relative pair (superlevel components), not reported
        else:
            raise NumericalError(f"unexpected persistence pair {birth_cell} -> {death_cell}")
    return PersistenceDiagram(tuple(dim0), tuple(dim1))


def compute_exdg1(fg: FilteredGraph,
                  max_vertices: int = DEFAULT_ORACLE_MAX_VERTICES) -> PersistenceDiagram:
    """1-dim extended diagram; one (birth >= death) point per independent loop."""
    return PersistenceDiagram(dim1=extended_persistence_oracle(fg, max_vertices).dim1)


def compute_diagrams(fg: FilteredGraph,
                     max_vertices: int = DEFAULT_ORACLE_MAX_VERTICES) -> PersistenceDiagram:
    dg = PersistenceDiagram(compute_dg0(fg).dim0, compute_exdg1(fg, max_vertices).dim1)
    check_cardinalities(fg, dg)
    return dg


def check_cardinalities(fg: FilteredGraph, dg: PersistenceDiagram) -> None:
    """Raise if the diagram disagrees with the graph's Betti numbers."""
    nv, ne = fg.n_vertices, len(fg.edges)
    c = fg.components()
    essential = sum(p.essential for p in dg.dim0)
    problems = []
    if len(dg.dim0) != nv:
        problems.append(f"|dim0| = {len(dg.dim0)} != |V| = {nv}")
    if essential != c:
        problems.append(f"essential dim0 = {essential} != components = {c}")
    if len(dg.dim1) != ne - nv + c:
        problems.append(f"|dim1| = {len(dg.dim1)} != |E| - |V| + c = {ne - nv + c}")
    for p in dg.dim0:
        if not p.death >= p.birth:
            problems.append(f"dim0 point {p} below the diagonal")
    for p in dg.dim1:
        if not p.birth >= p.death:
            problems.append(f"dim1 point {p} above the diagonal")
    if problems:
        raise NumericalError("diagram invariant violated: " + "; ".join(problems))


def diagram_multiset(points) -> Counter:
    return Counter((p.birth, p.death, p.essential) for p in points)


def save_diagram(dg: PersistenceDiagram, path, keep_diagonal: bool = False) -> None:
    Path(path).write_text(json.dumps(dg.to_json(keep_diagonal)) + "\n", encoding="utf-8")


def load_diagram(path) -> PersistenceDiagram:
    return PersistenceDiagram.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
