import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from dygmamba.bench import (BenchResult, attention_projections, attention_reference, doubling_ratios,
                            read_bench_csv, scaling_run, write_bench_csv)
from dygmamba.errors import ConfigError
from dygmamba.numerics.autograd import no_grad
from dygmamba.ssm import SelectiveBlock, selective_scan

from oracles import double_loop_attention


def test_single_row_attends_to_itself():
    H = np.random.default_rng(0).normal(size=(1, 6))
    Wq, Wk, Wv = attention_projections(6, seed=2)
    np.testing.assert_allclose(attention_reference(H, (Wq, Wk, Wv)), H @ Wv, rtol=0, atol=1e-15)


def test_uniform_rows_give_uniform_output():
    H = np.tile(np.arange(5.0), (7, 1))
    out = attention_reference(H, seed=1)
    np.testing.assert_allclose(out, np.tile(out[0], (7, 1)), rtol=0, atol=1e-13)


def test_attention_matches_double_loop():
    rng = np.random.default_rng(3)
    H = rng.normal(size=(4, 5))
    proj = attention_projections(5, seed=4)
    np.testing.assert_allclose(attention_reference(H, proj), double_loop_attention(H, *proj),
                               rtol=0, atol=1e-13)


def test_one_length_gives_one_row_per_kernel(tmp_path):
    res = scaling_run([16], width=8, reps=5, d_SSM=4)
    assert len(res) == 1 and res[0].scan_ns > 0 and res[0].attn_ns > 0
    write_bench_csv(tmp_path / "b.csv", res)
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "seq_len,kernel,median_ns,reps,width"
    assert [ln.split(",")[1] for ln in lines[1:]] == ["scan", "attention"]


def test_csv_round_trip(tmp_path):
    res = [BenchResult(256, 1234, 5678, 5, 16), BenchResult(512, 2500, 21000, 5, 16)]
    write_bench_csv(tmp_path / "b.csv", res)
    assert read_bench_csv(tmp_path / "b.csv") == res
    r = doubling_ratios(res)
    assert r["scan"] == [2500 / 1234] and r["attention"] == [21000 / 5678]


def test_instrumentation_does_not_change_scan():
    rng = np.random.default_rng(5)
    blk = SelectiveBlock(8, 4, rng)
    H = rng.normal(size=(64, 8))
    plain = selective_scan(blk, H).data
    with threadpool_limits(limits=1), no_grad():
        timed = selective_scan(blk, H).data
    assert plain.tobytes() == timed.tobytes()


def test_scaling_run_checks():
    with pytest.raises(ConfigError):
        scaling_run([8], reps=4)
    with pytest.raises(ConfigError):
        scaling_run([16, 8])
