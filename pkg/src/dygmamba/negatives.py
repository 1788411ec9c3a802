"""Negative edge sampling for training and evaluation.

``random`` corrupts the destination. ``historical`` and ``inductive`` draw a
whole (src, dst) pair from a pool of previously observed edges, following
the common evaluation-library convention, so the source is replaced too.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SamplingError
from .graph_store import DataSplit, TemporalGraph

NSS_KINDS = ("random", "historical", "inductive")
_RETRIES = 32


@dataclass(frozen=True)
class NssStrategy:
    kind: str = "random"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NSS_KINDS:
            raise ConfigError(f"unknown negative sampling strategy {self.kind!r}")


class _PairPool:
    """Directed pairs ordered by first appearance, for prefix-in-time draws."""

    def __init__(self, g: TemporalGraph, min_first_row=0):
        n = g.num_nodes
        keys = g.src * n + g.dst
        uniq, first = np.unique(keys, return_index=True)
        order = np.argsort(first, kind="stable")
        uniq, first = uniq[order], first[order]
        keep = first >= min_first_row
        self.keys = uniq[keep]
        self.first_ts = g.ts[first[keep]]
        self.n = n
        self.at = {(int(k), float(t)) for k, t in zip(keys.tolist(), g.ts.tolist())}

    def available(self, t):
        return int(np.searchsorted(self.first_ts, t, side="left"))

    def draw(self, rng, t):
        """A pair first seen before ``t`` that does not occur at ``t``, or None."""
        m = self.available(t)
        if m == 0:
            return None
        for _ in range(_RETRIES):
            key = int(self.keys[rng.integers(m)])
            if (key, t) not in self.at:
                return divmod(key, self.n)
        ok = [int(k) for k in self.keys[:m] if (int(k), t) not in self.at]
        if not ok:
            return None
        return divmod(ok[rng.integers(len(ok))], self.n)


def _random_dest(rng, dests, v):
    if len(dests) == 1:
        return int(dests[0]), bool(dests[0] == v)
    pos = np.searchsorted(dests, v)
    has_v = pos < len(dests) and dests[pos] == v
    if not has_v:
        return int(dests[rng.integers(len(dests))]), False
    j = int(rng.integers(len(dests) - 1))
    return int(dests[j + (j >= pos)]), False


def sample_negatives(strategy: NssStrategy, positives, g: TemporalGraph, split: DataSplit = None,
                     seed=None, return_flags=False):
    """One negative ``(u', v', t)`` per positive ``(u, v, t)``.

    ``flags`` (returned when ``return_flags``) marks negatives produced by
    the random fallback because the strategy's pool was empty, or, for the
    random strategy itself, degenerate draws equal to the positive.
    """
    rng = np.random.default_rng(strategy.seed if seed is None else seed)
    dests = g.destination_nodes()
    if len(dests) == 0:
        raise SamplingError("graph has no destination nodes to sample from")
    pool = None
    if strategy.kind == "historical":
        pool = _PairPool(g)
    elif strategy.kind == "inductive":
        if split is None:
            raise ConfigError("inductive negative sampling needs the data split")
        pool = _PairPool(g, min_first_row=split.train.stop)

    out, flags = [], np.zeros(len(positives), dtype=bool)
    for i, (u, v, t) in enumerate(positives):
        u, v, t = int(u), int(v), float(t)
        pair = pool.draw(rng, t) if pool is not None else None
        if pair is not None:
            out.append((int(pair[0]), int(pair[1]), t))
            continue
        w, degenerate = _random_dest(rng, dests, v)
        flags[i] = degenerate or pool is not None
        out.append((u, w, t))
    if strategy.kind == "random" and flags.any():
        warnings.warn("single-destination universe: negatives coincide with positives", stacklevel=2)
    if return_flags:
        return out, flags
    return out
