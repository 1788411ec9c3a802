"""Wall-clock scaling of the selective scan against quadratic self-attention."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError
from .numerics.autograd import no_grad
from .ssm import SelectiveBlock, selective_scan

KERNELS = ("scan", "attention")


@dataclass(frozen=True)
class BenchResult:
    seq_len: int
    scan_ns: int
    attn_ns: int
    reps: int
    channel_width: int


def attention_projections(width, seed=0):
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(width)
    return tuple(rng.normal(scale=scale, size=(width, width)) for _ in range(3))


def attention_reference(H, projections=None, seed=0):
    """Single-head scaled dot-product self-attention, forward only."""
    H = np.asarray(H, dtype=np.float64)
    Wq, Wk, Wv = projections if projections is not None else attention_projections(H.shape[1], seed)
    Q, K, V = H @ Wq, H @ Wk, H @ Wv
    S = (Q @ K.T) / np.sqrt(H.shape[1])
    S -= S.max(axis=1, keepdims=True)
    np.exp(S, out=S)
    S /= S.sum(axis=1, keepdims=True)
    return S @ V


def _median_ns(fn, reps, warmup):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        times.append(time.perf_counter_ns() - t0)
    return int(np.median(times))


def scaling_run(lengths, width=128, reps=5, seed=0, warmup=2, d_SSM=16):
    """Median forward time of both kernels at each length, single-threaded."""
    lengths = [int(L) for L in lengths]
    if not lengths or any(L < 1 for L in lengths) or lengths != sorted(lengths):
        raise ConfigError("lengths must be positive and ascending")
    if reps < 5:
        raise ConfigError(f"reps must be >= 5, got {reps}")
    rng = np.random.default_rng(seed)
    blk = SelectiveBlock(width, d_SSM, rng)
    proj = attention_projections(width, seed)
    H_all = rng.normal(size=(lengths[-1], width))
    out = []
    with threadpool_limits(limits=1), no_grad():
        for L in lengths:
            H = H_all[:L]
            scan_ns = _median_ns(lambda: selective_scan(blk, H), reps, warmup)
            attn_ns = _median_ns(lambda: attention_reference(H, proj), reps, warmup)
            out.append(BenchResult(L, scan_ns, attn_ns, reps, width))
    return out


def doubling_ratios(results):
    """Per kernel, time(L_{i+1}) / time(L_i) for consecutive lengths."""
    ratios = {k: [] for k in KERNELS}
    for a, b in zip(results, results[1:]):
        ratios["scan"].append(b.scan_ns / a.scan_ns)
        ratios["attention"].append(b.attn_ns / a.attn_ns)
    return ratios


def write_bench_csv(path, results):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seq_len", "kernel", "median_ns", "reps", "width"])
        for r in results:
            w.writerow([r.seq_len, "scan", r.scan_ns, r.reps, r.channel_width])
            w.writerow([r.seq_len, "attention", r.attn_ns, r.reps, r.channel_width])


def read_bench_csv(path):
    rows = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            key = (int(rec["seq_len"]), int(rec["reps"]), int(rec["width"]))
            rows.setdefault(key, {})[rec["kernel"]] = int(rec["median_ns"])
    return [BenchResult(L, k["scan"], k["attention"], reps, width)
            for (L, reps, width), k in sorted(rows.items())]
