import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dygmamba.errors import (
    DegenerateSplitError,
    DimensionError,
    NodeIdError,
    ParseError,
    ValidationError,
)
from dygmamba.graph_store import (
    TemporalGraph,
    chronological_split,
    load_graph,
    slice_before,
    write_id_map,
)

from conftest import random_graph


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_small_csv(tmp_path):
    g = load_graph(write(tmp_path / "e.csv", "src,dst,ts\n0,1,1.0\n0,2,2.0\n1,2,2.0\n"))
    assert g.num_nodes == 3 and len(g) == 3
    assert list(g.per_node_index[0]) == [0, 1]


def test_empty_body_is_valid(tmp_path):
    g = load_graph(write(tmp_path / "e.csv", "src,dst,ts\n"))
    assert len(g) == 0 and g.num_nodes == 0


def test_loader_sorts_stably_and_remaps(tmp_path):
    g = load_graph(write(tmp_path / "e.csv", "src,dst,ts\n10,30,5\n30,20,1\n20,10,5\n"))
    assert list(g.ts) == [1.0, 5.0, 5.0]
    assert g.id_map == {10: 0, 20: 1, 30: 2}
    assert list(zip(g.src, g.dst)) == [(2, 1), (0, 2), (1, 0)]
    write_id_map(g, tmp_path / "id_map.csv")
    assert (tmp_path / "id_map.csv").read_text().splitlines()[1] == "10,0"


def test_loader_reads_feature_files(tmp_path):
    e = write(tmp_path / "e.csv", "src,dst,ts\n0,1,2\n1,0,1\n")
    n = write(tmp_path / "n.csv", "id,f0,f1\n1,3,4\n0,1,2\n")
    ef = write(tmp_path / "ef.csv", "id,f0\n0,7\n1,9\n")
    g = load_graph(e, n, ef)
    assert g.node_features.tolist() == [[1, 2], [3, 4]]
    # edge rows follow their interactions through the time sort
    assert g.edge_features[:, 0].tolist() == [9, 7]


@pytest.mark.parametrize("body, err", [
    ("a,b,c\n", ParseError),
    ("src,dst,ts\n0,1\n", ParseError),
    ("src,dst,ts\n0,x,1\n", ParseError),
    ("src,dst,ts\n0,1,nan\n", ParseError),
    ("src,dst,ts\n0,1,-1\n", ValidationError),
])
def test_loader_rejects_bad_rows(tmp_path, body, err):
    with pytest.raises(err):
        load_graph(write(tmp_path / "e.csv", body))


def test_parse_error_reports_line(tmp_path):
    with pytest.raises(ParseError, match="line 3"):
        load_graph(write(tmp_path / "e.csv", "src,dst,ts\n0,1,1\n0,1\n"))


def test_feature_width_mismatch(tmp_path):
    e = write(tmp_path / "e.csv", "src,dst,ts\n0,1,1\n")
    n = write(tmp_path / "n.csv", "id,f0\n0,1\n1,2\n")
    with pytest.raises(DimensionError):
        load_graph(e, n, d_N=3)


def test_constructor_validation():
    with pytest.raises(ValidationError):
        TemporalGraph([0, 0], [1, 1], [2.0, 1.0])
    with pytest.raises(NodeIdError):
        TemporalGraph([0], [5], [1.0], num_nodes=3)
    with pytest.raises(DimensionError):
        TemporalGraph([0], [1], [1.0, 2.0])
    g = TemporalGraph([0], [1], [1.0])
    with pytest.raises(NodeIdError):
        g.node_history(7)


def test_graph_is_read_only():
    g = TemporalGraph([0], [1], [1.0])
    with pytest.raises(ValueError):
        g.ts[0] = 3.0


def test_split_floor_arithmetic():
    g = TemporalGraph(np.zeros(10, int), np.ones(10, int), np.arange(10.0))
    s = chronological_split(g, (0.7, 0.15, 0.15), 0.0)
    assert (s.train, s.val, s.test) == (range(0, 7), range(7, 8), range(8, 10))
    assert s.boundary_ts == (6.0, 7.0)


def test_split_all_same_timestamp_is_degenerate():
    g = TemporalGraph(np.zeros(10, int), np.ones(10, int), np.ones(10))
    with pytest.raises(DegenerateSplitError):
        chronological_split(g)


def test_split_boundaries_skip_ties():
    ts = np.arange(20.0)
    ts[14] = 13.0
    g = TemporalGraph(np.zeros(20, int), np.ones(20, int), ts)
    s = chronological_split(g, unseen_fraction=0.0)
    assert (s.train, s.val, s.test) == (range(0, 15), range(15, 17), range(17, 20))
    for a, b in ((s.train, s.val), (s.val, s.test)):
        assert g.ts[a.stop - 1] < g.ts[b.start]


def test_unseen_nodes_replay_seeded_sampler():
    g = random_graph(1000, 60, seed=3)
    s = chronological_split(g, unseen_fraction=0.1, seed=7)
    b1 = s.train.stop
    # independent replay: candidates are nodes active after the train block
    cand = sorted(set(g.src[b1:].tolist()) | set(g.dst[b1:].tolist()))
    count = min(int(0.1 * g.num_nodes), len(cand))
    expect = np.random.default_rng(7).choice(np.array(cand), size=count, replace=False)
    assert s.unseen_nodes == frozenset(int(x) for x in expect)
    assert len(s.unseen_nodes) == 6
    rows = s.train_rows(g)
    assert not s.touches_unseen(g, rows).any()


def test_split_covers_rows_once_and_is_deterministic():
    g = random_graph(300, 20, seed=1)
    a = chronological_split(g, seed=4)
    assert a == chronological_split(g, seed=4)
    covered = list(a.train) + list(a.val) + list(a.test)
    assert covered == list(range(len(g)))


def test_slice_before_examples():
    g = TemporalGraph([0, 0, 1, 0], [1, 2, 2, 3], [1.0, 2.0, 3.0, 5.0], num_nodes=5)
    assert slice_before(g, 4, 10.0).tolist() == []
    assert slice_before(g, 0, 5.0).tolist() == [0, 1]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0, 30))
def test_slice_before_matches_linear_scan(seed, t):
    g = random_graph(50, 8, seed)
    for node in range(g.num_nodes):
        expect = [i for i in range(len(g))
                  if g.ts[i] < t and node in (g.src[i], g.dst[i])]
        got = slice_before(g, node, t).tolist()
        assert got == expect
        later = [int(i) for i in g.per_node_index[node] if g.ts[i] >= t]
        assert sorted(got + later) == list(g.per_node_index[node])


def test_pair_times_both_directions():
    g = TemporalGraph([0, 1, 0], [1, 0, 2], [1.0, 2.0, 3.0])
    assert g.pair_times(1, 0).tolist() == [1.0, 2.0]
    assert g.pair_times(2, 1).tolist() == []
    assert math.isclose(g.pair_times(0, 2)[0], 3.0)
