import json
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from visnet import oracles, persistence
from visnet.corrnet import VisualNetwork
from visnet.errors import OracleBoundError
from visnet.persistence import INF, PersistenceDiagram, PersistencePoint, UnionFind


def net(n, edges):
    return VisualNetwork(tuple(f"v{i}" for i in range(n)), tuple(edges))


def pts(points):
    return sorted((p.birth, p.death) for p in points)


def off_diagonal(points):
    return [p for p in points if not p.on_diagonal]


def nonforest_weights(fg, descending):
    """Weights of edges that close a cycle in a Kruskal sweep."""
    uf = UnionFind(fg.n_vertices)
    out = []
    for u, v, w in sorted(fg.edges, key=lambda e: e[2], reverse=descending):
        if uf.union(u, v) is None:
            out.append(w)
    return sorted(out)


@pytest.mark.parametrize(
    "edges, n, expected",
    [
        (((0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)), 3, (1.0, 1.0, 2.0)),
        (((0, 1, 0.7),), 2, (0.7, 0.7)),
        (((0, 1, 2.0), (0, 2, 5.0)), 3, (2.0, 2.0, 5.0)),
        (((0, 1, 0.3),), 3, (0.3, 0.3, 0.0)),
    ],
)
def test_build_filtration_min_rule(edges, n, expected):
    fg = persistence.build_filtration(net(n, edges))
    assert fg.vertex_values == expected
    assert [e[2] for e in fg.edges] == [e[2] for e in sorted(edges)]


def test_isolated_value_configurable():
    fg = persistence.build_filtration(net(2, ()), isolated_value=-1.0)
    assert fg.vertex_values == (-1.0, -1.0)


def test_five_vertex_dg0(five_vertex_network):
    dg = persistence.compute_dg0(persistence.build_filtration(five_vertex_network))
    assert pts(off_diagonal(dg.dim0)) == [(1.0, INF), (2.0, 4.0)]
    # the diagonal point (6, 6) is recorded before filtering
    assert (6.0, 6.0) in pts(dg.dim0)
    assert len(dg.dim0) == 5


def test_five_vertex_oracle(five_vertex_network):
    fg = persistence.build_filtration(five_vertex_network)
    dg = persistence.extended_persistence_oracle(fg)
    assert pts(off_diagonal(dg.dim0)) == [(1.0, INF), (2.0, 4.0)]
    assert pts(dg.dim1) == [(7.0, 4.0)]
    assert persistence.compute_diagrams(fg).to_json() == {
        "dim0": [[1.0, None], [2.0, 4.0]],
        "dim1": [[7.0, 4.0]],
    }


def test_triangle_dim1():
    fg = persistence.build_filtration(net(3, ((0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0))))
    assert pts(persistence.compute_exdg1(fg).dim1) == [(3.0, 1.0)]


def test_single_edge_and_isolated():
    fg = persistence.build_filtration(net(2, ((0, 1, 0.4),)))
    assert pts(off_diagonal(persistence.compute_dg0(fg).dim0)) == [(0.4, INF)]
    fg = persistence.build_filtration(net(2, ()))
    dg = persistence.compute_diagrams(fg)
    assert pts(off_diagonal(dg.dim0)) == [(0.0, INF), (0.0, INF)]
    assert dg.dim1 == ()


@pytest.mark.parametrize("seed", range(5))
def test_cycle_graph_point_is_max_min(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    w = rng.permutation(n) + 1.0
    fg = persistence.build_filtration(net(n, [(min(i, (i + 1) % n), max(i, (i + 1) % n), w[i]) for i in range(n)]))
    assert pts(persistence.compute_exdg1(fg).dim1) == [(float(w.max()), float(w.min()))]


@pytest.mark.parametrize("seed", range(5))
def test_trees_have_no_loops(seed):
    rng = np.random.default_rng(seed)
    n = 10
    edges = [(int(rng.integers(k)), k, float(k) + rng.random()) for k in range(1, n)]
    dg = persistence.compute_diagrams(persistence.build_filtration(net(n, edges)))
    assert dg.dim1 == ()
    assert sum(p.essential for p in dg.dim0) == 1


def test_forest_one_essential_per_component():
    dg = persistence.compute_diagrams(persistence.build_filtration(
        net(5, ((0, 1, 1.0), (1, 2, 2.0), (3, 4, 0.5)))))
    assert sum(p.essential for p in dg.dim0) == 2


def test_random_suite_dg0_matches_oracle():
    res = oracles.persistence_suite(100, seed=0)
    assert res.ok, res.failures


@pytest.mark.parametrize("seed", range(20))
def test_dim1_spanning_forest_characterization(seed):
    # births are the cycle-closing edges of the ascending Kruskal sweep,
    # deaths those of the descending sweep
    rng = np.random.default_rng(seed)
    fg = persistence.build_filtration(oracles.random_network(rng, connected=bool(seed % 2)))
    d1 = persistence.compute_exdg1(fg).dim1
    assert sorted(p.birth for p in d1) == nonforest_weights(fg, descending=False)
    assert sorted(p.death for p in d1) == nonforest_weights(fg, descending=True)
    assert all(p.birth >= p.death for p in d1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_relabel_invariance(seed):
    rng = np.random.default_rng(seed)
    g = oracles.random_network(rng, connected=False)
    n = len(g.vertices)
    perm = rng.permutation(n)
    edges = tuple((min(perm[i], perm[j]), max(perm[i], perm[j]), w) for i, j, w in g.edges)
    h = VisualNetwork(tuple(f"v{i}" for i in range(n)), tuple((int(a), int(b), w) for a, b, w in edges))
    a = persistence.compute_diagrams(persistence.build_filtration(g))
    b = persistence.compute_diagrams(persistence.build_filtration(h))
    assert persistence.diagram_multiset(a.dim0) == persistence.diagram_multiset(b.dim0)
    assert persistence.diagram_multiset(a.dim1) == persistence.diagram_multiset(b.dim1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([-0.5, 0.25, 1.0, 3.0]))
def test_shift_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    g = oracles.random_network(rng)
    shifted = VisualNetwork(g.vertices, tuple((i, j, w + c) for i, j, w in g.edges))
    a = persistence.compute_diagrams(persistence.build_filtration(g))
    b = persistence.compute_diagrams(persistence.build_filtration(shifted))
    # c is a power of two fraction and weights are moderate, so sums are exact
    # up to the rounding of w + c itself; compare against the shifted value
    for dim in ("dim0", "dim1"):
        lhs = sorted((p.birth + c, p.death + c if math.isfinite(p.death) else INF) for p in getattr(a, dim))
        rhs = sorted((p.birth, p.death) for p in getattr(b, dim))
        assert lhs == rhs


def test_oracle_bound():
    fg = persistence.build_filtration(net(5, ((0, 1, 1.0),)))
    with pytest.raises(OracleBoundError, match="oracle_max_vertices"):
        persistence.extended_persistence_oracle(fg, max_vertices=4)


def test_cardinality_check_rejects_bad_diagram(five_vertex_network):
    from visnet.errors import NumericalError

    fg = persistence.build_filtration(five_vertex_network)
    with pytest.raises(NumericalError):
        persistence.check_cardinalities(fg, PersistenceDiagram((), ()))


def test_union_find_elder_root():
    uf = UnionFind(3)
    assert uf.union(2, 1) == (1, 2)
    assert uf.union(0, 2) == (0, 1)
    assert uf.union(0, 1) is None


def test_diagram_json_roundtrip(tmp_path, five_vertex_network):
    dg = persistence.compute_diagrams(persistence.build_filtration(five_vertex_network))
    persistence.save_diagram(dg, tmp_path / "d.json")
    back = persistence.load_diagram(tmp_path / "d.json")
    assert back.to_json() == dg.to_json()
    raw = json.loads((tmp_path / "d.json").read_text())
    assert raw["dim0"][0][1] is None
    full = dg.to_json(keep_diagonal=True)
    assert [6.0, 6.0] in full["dim0"]


def test_points_filtering():
    dg = PersistenceDiagram(
        (PersistencePoint(1.0, 1.0, 0), PersistencePoint(1.0, INF, 0, True), PersistencePoint(0.5, 2.0, 0)),
        (PersistencePoint(3.0, 1.0, 1),),
    )
    assert dg.points(0) == [(0.5, 2.0)]
    assert len(dg.points(0, keep_diagonal=True)) == 2
    assert dg.points(0, keep_essential=True, cap=9.0) == [(1.0, 9.0), (0.5, 2.0)]
    assert dg.points(1) == [(3.0, 1.0)]
    with pytest.raises(ValueError):
        dg.points(0, keep_essential=True)


def test_desk_scale_speed():
    rng = np.random.default_rng(0)
    g = oracles.random_network(rng, max_vertices=30, max_edges=200)
    t0 = time.perf_counter()
    persistence.compute_diagrams(persistence.build_filtration(g))
    assert time.perf_counter() - t0 < 1.0
