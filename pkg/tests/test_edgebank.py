import math

import numpy as np
import pytest

from dygmamba.edgebank import STRATEGIES, EdgeBank, EdgeMemory, edgebank_reports
from dygmamba.errors import ConfigError, OrderError
from dygmamba.graph_store import TemporalGraph, chronological_split
from dygmamba.synth import synth_dataset

from oracles import edgebank_filter


def test_infinite_remembers():
    mem = EdgeMemory("infinite").observe(0, 1, 5.0)
    assert mem.predict(0, 1, 5.0) == 1 and mem.predict(1, 0, 5.0) == 0
    assert mem.predict(0, 1, 1e9) == 1


def test_tw_ts_window():
    mem = EdgeMemory("tw_ts", window=10).observe(0, 1, 0.0)
    assert mem.predict(0, 1, 10.0) == 1
    assert mem.predict(0, 1, 11.0) == 0


def test_tw_re_average_gap():
    mem = EdgeMemory("tw_re")
    for u, v, t in [(0, 1, 0.0), (2, 3, 1.0), (0, 1, 2.0), (2, 3, 5.0)]:
        mem.observe(u, v, t)
    assert mem.window == 3.0
    assert mem.predict(0, 1, 5.0) == 1 and mem.predict(0, 1, 5.5) == 0
    assert math.isinf(EdgeMemory("tw_re").observe(0, 1, 0.0).window)


def test_threshold_is_strict():
    mem = EdgeMemory("threshold", thresh=2)
    for t in (1.0, 2.0):
        mem.observe(0, 1, t)
    assert mem.predict(0, 1, 3.0) == 0
    mem.observe(0, 1, 3.0)
    assert mem.predict(0, 1, 4.0) == 1


def test_never_seen_pair():
    for s in STRATEGIES:
        assert EdgeMemory(s, window=1.0).predict(7, 8, 0.0) == 0


def test_errors():
    with pytest.raises(OrderError):
        EdgeMemory().observe(0, 1, 2.0).observe(0, 1, 1.0)
    with pytest.raises(ConfigError):
        EdgeMemory("forever")
    with pytest.raises(ConfigError):
        EdgeMemory("tw_ts")


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_stream_replay_matches_full_history_filter(strategy):
    rng = np.random.default_rng(3)
    ts = np.sort(rng.choice(np.arange(200), 50, replace=False)).astype(float)
    src, dst = rng.integers(0, 3, 50), rng.integers(3, 6, 50)
    events = list(zip(src.tolist(), dst.tolist(), ts.tolist()))
    mem = EdgeMemory(strategy, window=30.0, thresh=1)
    for u, v, t in events:
        t_q = t + 0.5
        mem.observe(u, v, t)
        for qu in range(3):
            for qv in range(3, 6):
                want = edgebank_filter(events, strategy, qu, qv, t_q, window=30.0, thresh=1)
                assert mem.predict(qu, qv, t_q) == want


def test_infinite_is_monotone():
    g = synth_dataset(5, noise_edges=60, horizon=30.0, seed=1)
    mem = EdgeMemory("infinite")
    ever = set()
    for u, v, t in zip(g.src, g.dst, g.ts):
        mem.observe(u, v, t)
        ever.add((int(u), int(v)))
        assert all(mem.predict(a, b, t) for a, b in ever)


def test_tw_ts_ignores_old_history():
    a = TemporalGraph([0, 0, 2], [1, 1, 3], [1.0, 2.0, 50.0])
    b = TemporalGraph([5, 0, 2], [6, 1, 3], [1.0, 2.0, 50.0])
    bank = EdgeBank("tw_ts", window=10.0)
    for g in (a, b):
        np.testing.assert_array_equal(bank.predict_proba(g, [0, 2, 5], [1, 3, 6], [55.0] * 3), [0, 1, 0])


def test_scorer_sees_only_strict_past():
    g = TemporalGraph([0, 0], [1, 1], [1.0, 3.0])
    got = EdgeBank().predict_proba(g, [0, 0, 0], [1, 1, 1], [3.0, 1.0, 2.0])
    np.testing.assert_array_equal(got, [1, 0, 1])


def test_reports_include_max():
    g = synth_dataset(10, noise_edges=200, horizon=40.0)
    split = chronological_split(g)
    reports, best = edgebank_reports(g, split)
    assert set(reports) == set(STRATEGIES) | {"max"}
    assert reports["max"].ap == max(reports[s].ap for s in STRATEGIES)
    assert reports[best].ap == reports["max"].ap
