"""Raw model inputs: recent one-hop neighbours and pair co-interaction gaps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph_store import TemporalGraph

SENTINEL_DELTA = 1e10


@dataclass(frozen=True)
class NeighborSequence:
    """The ``rho`` most recent interactions of ``owner`` before ``query_ts``.

    ``neighbors``, ``ts`` and ``edge_rows`` are aligned and chronological.
    The appended self entry ``(owner, query_ts)`` is implicit and always
    sits after the last real entry.
    """

    owner: int
    query_ts: float
    neighbors: np.ndarray
    ts: np.ndarray
    edge_rows: np.ndarray

    @property
    def entries(self):
        return [(int(n), float(t), int(e)) for n, t, e in zip(self.neighbors, self.ts, self.edge_rows)]

    @property
    def appended_self(self):
        return (self.owner, self.query_ts)

    def __len__(self):
        """Sequence length including the appended self entry."""
        return len(self.neighbors) + 1


@dataclass(frozen=True)
class TimeDeltaSequence:
    deltas: np.ndarray
    found_count: int


def recent_neighbors(g: TemporalGraph, node: int, t: float, rho: int) -> NeighborSequence:
    if rho < 1:
        raise ConfigError(f"rho must be >= 1, got {rho}")
    rows, nbrs, ts = g.node_history(node)
    cut = g.history_cut(node, t)
    lo = max(0, cut - rho)
    return NeighborSequence(int(node), float(t), nbrs[lo:cut], ts[lo:cut], rows[lo:cut])


def co_interaction_deltas(g: TemporalGraph, u: int, v: int, t: float, k: int) -> TimeDeltaSequence:
    """Gaps between the ``k`` latest u-v interactions before ``t`` and ``t`` itself.

    Missing slots are left-padded with ``SENTINEL_DELTA`` so the final entry
    is always the time since the last co-interaction (when one exists).
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    g.check_node(u)
    g.check_node(v)
    times = g.pair_times(u, v)
    cut = int(np.searchsorted(times, t, side="left"))
    found = times[max(0, cut - k):cut]
    out = np.full(k, SENTINEL_DELTA)
    if len(found):
        out[k - len(found):] = np.diff(np.append(found, t))
    return TimeDeltaSequence(out, len(found))


def pair_history_count(g: TemporalGraph, u: int, v: int, t: float) -> int:
    """Number of u-v interactions (either direction) strictly before ``t``."""
    return int(np.searchsorted(g.pair_times(u, v), t, side="left"))


def cooccurrence_counts(seq_u: NeighborSequence, seq_v: NeighborSequence, pair_history_count: int):
    """Per-entry appearance counts of each neighbour in both sequences.

    Row ``i`` of either matrix is ``[#x in seq_u, #x in seq_v]`` for the
    neighbour ``x`` of entry ``i``, where each sequence also counts its own
    owner once (so an earlier u-v interaction scores 1 on both sides). The
    appended self rows are ``[0, pair_history_count]``.
    """
    a = np.asarray(seq_u.neighbors)
    b = np.asarray(seq_v.neighbors)
    a_all = np.append(a, seq_u.owner)
    b_all = np.append(b, seq_v.owner)
    counts_u = np.zeros((len(a) + 1, 2))
    counts_v = np.zeros((len(b) + 1, 2))
    counts_u[:-1, 0] = (a[:, None] == a_all[None, :]).sum(1)
    counts_u[:-1, 1] = (a[:, None] == b_all[None, :]).sum(1)
    counts_v[:-1, 0] = (b[:, None] == a_all[None, :]).sum(1)
    counts_v[:-1, 1] = (b[:, None] == b_all[None, :]).sum(1)
    counts_u[-1] = counts_v[-1] = (0.0, float(pair_history_count))
    return counts_u, counts_v
