import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import ts
from visnet import ingest
from visnet.errors import DegenerateChannelError, ParseError, PreconditionError, ShapeError, SpecError


def test_load_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("v1,1,2,3\nv2,4,5,6\n")
    s = ingest.load_time_series(p)
    assert s.values.shape == (2, 3)
    assert s.channel_ids == ("v1", "v2")
    assert s.timepoint_labels is None
    np.testing.assert_array_equal(s.values, [[1, 2, 3], [4, 5, 6]])


def test_load_with_labels(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("v1,1,2,3\nv2,4,5,6\n")
    (tmp_path / "x.labels").write_text("A,A,B\n")
    s = ingest.load_time_series(p, tmp_path / "x.labels")
    assert s.timepoint_labels == ("A", "A", "B")


def test_load_ragged_row_names_row(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("v1,1,2,3\nv2,4,5\nv3,1,1,1\n")
    with pytest.raises(ShapeError, match="row 2"):
        ingest.load_time_series(p)


def test_load_non_numeric(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("v1,1,2,3\nv2,4,x,6\n")
    with pytest.raises(ParseError, match="row 2"):
        ingest.load_time_series(p)


def test_label_count_mismatch(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("v1,1,2,3\n")
    (tmp_path / "l").write_text("A,B\n")
    with pytest.raises(ShapeError):
        ingest.load_time_series(p, tmp_path / "l")


def test_write_roundtrip(tmp_path):
    s = ts(np.random.default_rng(0).normal(size=(3, 7)), list("ABABABA"))
    ingest.write_time_series(s, tmp_path / "a.csv", tmp_path / "a.labels")
    back = ingest.load_time_series(tmp_path / "a.csv", tmp_path / "a.labels")
    np.testing.assert_array_equal(back.values, s.values)
    assert back.timepoint_labels == s.timepoint_labels


@pytest.mark.parametrize(
    "row, expected",
    [([1, 2, 3], [0, 0, 0]), ([5, 5, 5], [0, 0, 0])],
)
def test_detrend_trivial(row, expected):
    np.testing.assert_allclose(ingest.detrend(ts([row])).values[0], expected, atol=1e-12)


def test_detrend_normal_equations():
    y = np.array([1.0, 3.0, 2.0])
    A = np.column_stack([np.ones(3), np.arange(3.0)])
    coef = np.linalg.solve(A.T @ A, A.T @ y)  # intercept 1.5, slope 0.5
    np.testing.assert_allclose(coef, [1.5, 0.5])
    expected = y - A @ coef
    np.testing.assert_allclose(expected, [-0.5, 1.0, -0.5])
    np.testing.assert_allclose(ingest.detrend(ts([y])).values[0], expected, atol=1e-12)


def test_detrend_too_short():
    with pytest.raises(ShapeError):
        ingest.detrend(ts([[1.0]]))


finite_rows = arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(2, 40)),
                     elements=st.floats(-1e3, 1e3))


@given(finite_rows)
def test_detrend_properties(x):
    d = ingest.detrend(ts(x))
    t = np.arange(x.shape[1]) - (x.shape[1] - 1) / 2
    scale = max(1.0, np.abs(x).max())
    # orthogonal to the ramp and to the constant
    assert np.all(np.abs(d.values @ t) <= 1e-10 * scale * (t @ t))
    np.testing.assert_allclose(ingest.detrend(d).values, d.values, atol=1e-10 * scale)


def test_zscore_values():
    z = ingest.zscore(ts([[1, 2, 3], [-1, 1, 1]])).values
    sd = np.sqrt(2 / 3)
    np.testing.assert_allclose(z[0], [-1 / sd, 0, 1 / sd], atol=1e-12)
    np.testing.assert_allclose(z[0], [-1.224744871391589, 0, 1.224744871391589], atol=1e-12)
    np.testing.assert_allclose(ingest.zscore(ts([[-1, 1]])).values[0], [-1, 1], atol=1e-15)


def test_zscore_degenerate_names_channel():
    with pytest.raises(DegenerateChannelError) as err:
        ingest.zscore(ts([[1, 2, 3], [0, 0, 0]]))
    assert err.value.channel == "c1"


@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(3, 60)),
              elements=st.floats(-100, 100)))
def test_zscore_moments(x):
    s = ts(x)
    if ingest.degenerate_channels(s) or np.any(x.std(axis=1) < 1e-6):
        return
    z = ingest.zscore(s).values
    assert np.all(np.abs(z.mean(axis=1)) < 1e-12)
    assert np.all(np.abs(z.std(axis=1) - 1) < 1e-12)


def test_split_by_class():
    s = ts([[1, 2, 3], [4, 5, 6]], ["A", "B", "A"])
    out = ingest.split_by_class(s)
    assert list(out) == ["A", "B"]
    np.testing.assert_array_equal(out["A"].values, [[1, 3], [4, 6]])
    np.testing.assert_array_equal(out["B"].values, [[2], [5]])


def test_split_single_class_and_partition():
    s = ts([[1, 2, 3]], ["A", "A", "A"])
    np.testing.assert_array_equal(ingest.split_by_class(s)["A"].values, s.values)
    parts = ingest.split_by_class(ts([[1, 2, 3]], ["A", "B", "C"]))
    assert [p.values.shape for p in parts.values()] == [(1, 1)] * 3


def test_split_needs_labels():
    with pytest.raises(PreconditionError):
        ingest.split_by_class(ts([[1, 2, 3]]))


@given(st.lists(st.sampled_from("ABC"), min_size=2, max_size=30))
def test_split_preserves_columns(labels):
    m = len(labels)
    s = ts(np.arange(2 * m, dtype=float).reshape(2, m), labels)
    out = ingest.split_by_class(s)
    cols = np.concatenate([v.values[0] for v in out.values()])
    assert sorted(cols) == list(s.values[0])
    assert sum(v.n_timepoints for v in out.values()) == m


def test_toy_model_correlations():
    toy = ingest.synth_toy_three_node(0.4, 0.9, 0.5, 10000, seed=7)
    r = np.corrcoef(toy.values)
    # population value 0.36 / (sqrt(0.41) sqrt(1.06)) ~ 0.546
    assert abs(0.36 / np.sqrt(0.41 * 1.06) - 0.546) < 1e-3
    assert r[1, 2] > 0.4
    assert abs(r[1, 2] - 0.546) < 0.03


def test_toy_model_independent_channels():
    toy = ingest.synth_toy_three_node(0.0, 0.0, 1.0, 100, seed=3)
    r = np.corrcoef(toy.values)
    assert np.all(np.abs(r[np.triu_indices(3, 1)]) < 0.3)


def test_toy_model_deterministic():
    a = ingest.synth_toy_three_node(0.4, 0.9, 0.5, 50, seed=1)
    b = ingest.synth_toy_three_node(0.4, 0.9, 0.5, 50, seed=1)
    assert a.values.tobytes() == b.values.tobytes()
    with pytest.raises(PreconditionError):
        ingest.synth_toy_three_node(0.4, 0.9, 0.5, 9, seed=1)


def test_synth_dataset_cardinality_and_determinism():
    spec = ingest.default_synthetic_spec(channels=8, timepoints=20)
    a = ingest.synth_class_dataset(spec, 3, seed=5)
    b = ingest.synth_class_dataset(spec, 3, seed=5)
    assert len(a) == 9
    assert [(s, c) for s, c, _ in a] == [(s, c) for s, c, _ in b]
    assert all(x.values.tobytes() == y.values.tobytes() for (_, _, x), (_, _, y) in zip(a, b))
    assert len({x.values.tobytes() for _, _, x in a}) == 9


def test_synth_identity_precision_is_independent():
    spec = ingest.SyntheticSpec(
        1, 5, 5000, class_structure=(ingest.ClassStructure("I", "explicit", edges=()),)
    )
    (_, _, x), *_ = ingest.synth_class_dataset(spec, 2, seed=0)
    r = np.corrcoef(x.values)
    assert np.all(np.abs(r[np.triu_indices(5, 1)]) < 0.1)


def test_planted_precisions_valid():
    spec = ingest.default_synthetic_spec()
    mats = spec.precisions()
    for m in mats:
        assert np.allclose(m, m.T)
        assert np.linalg.eigvalsh(m)[0] > 0
    patterns = {tuple(map(tuple, np.argwhere(np.triu(m, 1) != 0))) for m in mats}
    assert len(patterns) == len(mats)


def test_sampled_covariance_matches_planted():
    spec = ingest.SyntheticSpec(
        1, 4, 20000,
        class_structure=(ingest.ClassStructure("A", "explicit", edges=((0, 1, 0.4), (2, 3, 0.3))),),
    )
    omega = spec.precisions()[0]
    (_, _, x), *_ = ingest.synth_class_dataset(spec, 2, seed=1)
    np.testing.assert_allclose(np.cov(x.values), np.linalg.inv(omega), atol=0.05)


def test_spec_errors():
    with pytest.raises(SpecError):
        ingest.SyntheticSpec(2, 4, 10, class_structure=(ingest.ClassStructure("A", "chain"),)).precisions()
    same = (ingest.ClassStructure("A", "explicit", edges=((0, 1, .3),)),
            ingest.ClassStructure("B", "explicit", edges=((0, 1, .5),)))
    with pytest.raises(SpecError, match="distinct"):
        ingest.SyntheticSpec(2, 4, 10, class_structure=same).precisions()
    with pytest.raises(PreconditionError):
        ingest.synth_class_dataset(ingest.default_synthetic_spec(), 1, 0)
