"""Synthetic bipartite streams with planted, slowly stretching pair rhythms.

Planted pair ``i`` links user ``i`` to item ``num_pairs + i``. Its first
event sits at ``period * i / num_pairs`` (staggered so pairs do not fire in
lockstep) and successive gaps grow geometrically: ``period``,
``period * decay``, ``period * decay**2``, ... up to ``horizon``.

Noise edges connect a separate background population of ``noise_nodes``
users and ``noise_nodes`` items at uniform random times, so planted pairs
stay recognisable by their own history.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .graph_store import TemporalGraph, write_edges


def planted_times(offset, period, decay, horizon):
    times, t, gap = [], float(offset), float(period)
    while t <= horizon:
        times.append(t)
        t += gap
        gap *= decay
    return times


def synth_dataset(num_pairs, period=1.0, decay=1.1, noise_edges=0, horizon=200.0, seed=0,
                  noise_nodes=None, d_N=172, d_E=172, out_dir=None):
    """Build the planted stream; with ``out_dir`` also write ``edges.csv`` and ``manifest.json``."""
    if num_pairs < 1:
        raise ConfigError(f"num_pairs must be >= 1, got {num_pairs}")
    if not period > 0:
        raise ConfigError(f"period must be positive, got {period}")
    if not decay >= 1:
        raise ConfigError(f"decay must be >= 1, got {decay}")
    if noise_edges < 0:
        raise ConfigError(f"noise_edges must be >= 0, got {noise_edges}")
    if horizon < period:
        raise ConfigError(f"horizon {horizon} is shorter than one period ({period}); "
                          "some pairs would get no events")
    if noise_nodes is None:
        noise_nodes = max(1, num_pairs // 4)
    if noise_nodes < 1:
        raise ConfigError(f"noise_nodes must be >= 1, got {noise_nodes}")

    rng = np.random.default_rng(seed)
    src, dst, ts, counts = [], [], [], []
    for i in range(num_pairs):
        times = planted_times(period * i / num_pairs, period, decay, horizon)
        src += [i] * len(times)
        dst += [num_pairs + i] * len(times)
        ts += times
        counts.append(len(times))
    base = 2 * num_pairs
    noise_src = base + rng.integers(noise_nodes, size=noise_edges)
    noise_dst = base + noise_nodes + rng.integers(noise_nodes, size=noise_edges)
    noise_ts = rng.uniform(0.0, horizon, size=noise_edges)

    src = np.r_[np.asarray(src, dtype=np.int64), noise_src]
    dst = np.r_[np.asarray(dst, dtype=np.int64), noise_dst]
    ts = np.r_[np.asarray(ts, dtype=np.float64), noise_ts]
    order = np.argsort(ts, kind="stable")
    src, dst, ts = src[order], dst[order], ts[order]
    num_nodes = base + 2 * noise_nodes
    g = TemporalGraph(src, dst, ts, num_nodes=num_nodes, d_N=d_N, d_E=d_E)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_edges(out / "edges.csv", src, dst, ts)
        manifest = {
            "num_pairs": num_pairs, "period": period, "decay": decay,
            "noise_edges": noise_edges, "horizon": horizon, "seed": seed,
            "noise_nodes": noise_nodes, "num_nodes": num_nodes,
            "planted_pairs": [[i, num_pairs + i] for i in range(num_pairs)],
            "events_per_pair": counts,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return g
