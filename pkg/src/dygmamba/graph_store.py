"""Immutable chronological interaction streams and their train/val/test splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    ConfigError,
    DegenerateSplitError,
    DimensionError,
    NodeIdError,
    ParseError,
    ValidationError,
)


class Interaction(NamedTuple):
    src: int
    dst: int
    ts: float
    edge_feat_row: int | None


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class TemporalGraph:
    """A chronologically ordered interaction stream with feature tables.

    Interaction ``i`` uses row ``i`` of ``edge_features``. Per-node indices
    list, for every node, the interactions it takes part in (as source or
    destination) in stream order. Instances are read-only after
    construction.
    """

    def __init__(self, src, dst, ts, num_nodes=None, node_features=None,
                 edge_features=None, d_N=0, d_E=0, id_map=None):
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        ts = np.asarray(ts, dtype=np.float64).reshape(-1)
        if not (len(src) == len(dst) == len(ts)):
            raise DimensionError("src, dst and ts must have equal length")
        if len(ts) and not np.all(np.isfinite(ts)):
            raise ValidationError("timestamps must be finite")
        if len(ts) and ts.min() < 0:
            raise ValidationError(f"negative timestamp {ts.min()!r}")
        if len(ts) > 1 and np.any(np.diff(ts) < 0):
            raise ValidationError("interactions must be ordered by non-decreasing timestamp")
        seen_max = int(max(src.max(initial=-1), dst.max(initial=-1)))
        if num_nodes is None:
            num_nodes = seen_max + 1
            if node_features is not None:
                num_nodes = max(num_nodes, len(node_features))
        if len(src) and (min(src.min(), dst.min()) < 0 or seen_max >= num_nodes):
            raise NodeIdError(f"node ids must lie in [0, {num_nodes})")

        if node_features is None:
            node_features = np.zeros((num_nodes, d_N))
        node_features = np.asarray(node_features, dtype=np.float64)
        if node_features.ndim != 2 or node_features.shape[0] != num_nodes:
            raise DimensionError(
                f"node feature table has shape {node_features.shape}, expected ({num_nodes}, d_N)")
        if edge_features is None:
            edge_features = np.zeros((len(src), d_E))
        edge_features = np.asarray(edge_features, dtype=np.float64)
        if edge_features.ndim != 2 or edge_features.shape[0] != len(src):
            raise DimensionError(
                f"edge feature table has shape {edge_features.shape}, expected ({len(src)}, d_E)")

        self.src = _frozen(src)
        self.dst = _frozen(dst)
        self.ts = _frozen(ts)
        self.num_nodes = int(num_nodes)
        self.node_features = _frozen(node_features)
        self.edge_features = _frozen(edge_features)
        self.d_N = node_features.shape[1]
        self.d_E = edge_features.shape[1]
        self.id_map = dict(id_map) if id_map is not None else None
        self._build_indices()

    def _build_indices(self):
        n = len(self.src)
        # Each interaction is listed once per distinct endpoint (self-loops once).
        idx = np.arange(n)
        loop = self.src == self.dst
        owners = np.concatenate([self.src, self.dst[~loop]])
        rows = np.concatenate([idx, idx[~loop]])
        others = np.concatenate([self.dst, self.src[~loop]])
        order = np.lexsort((rows, owners))
        owners, rows, others = owners[order], rows[order], others[order]
        bounds = np.searchsorted(owners, np.arange(self.num_nodes + 1))
        self._node_rows = _frozen(rows)
        self._node_nbrs = _frozen(others)
        self._node_ts = _frozen(self.ts[rows])
        self._bounds = _frozen(bounds)

        pairs: dict[tuple[int, int], list[float]] = {}
        for s, d, t in zip(self.src.tolist(), self.dst.tolist(), self.ts.tolist()):
            key = (s, d) if s <= d else (d, s)
            pairs.setdefault(key, []).append(t)
        self._pair_ts = {k: _frozen(np.array(v)) for k, v in pairs.items()}

    def __len__(self):
        return len(self.src)

    def __repr__(self):
        return (f"TemporalGraph(num_nodes={self.num_nodes}, num_interactions={len(self)}, "
                f"d_N={self.d_N}, d_E={self.d_E})")

    @property
    def interactions(self):
        return [Interaction(int(s), int(d), float(t), i)
                for i, (s, d, t) in enumerate(zip(self.src, self.dst, self.ts))]

    @property
    def per_node_index(self):
        return [self._node_rows[self._bounds[u]:self._bounds[u + 1]] for u in range(self.num_nodes)]

    def check_node(self, node):
        if not (0 <= int(node) < self.num_nodes):
            raise NodeIdError(f"node {node} not in graph with {self.num_nodes} nodes")
        return int(node)

    def node_history(self, node):
        """(interaction rows, neighbours, timestamps) of ``node`` in stream order."""
        u = self.check_node(node)
        lo, hi = self._bounds[u], self._bounds[u + 1]
        return self._node_rows[lo:hi], self._node_nbrs[lo:hi], self._node_ts[lo:hi]

    def history_cut(self, node, t):
        """Number of the node's interactions strictly before ``t``."""
        u = self.check_node(node)
        lo, hi = self._bounds[u], self._bounds[u + 1]
        return int(np.searchsorted(self._node_ts[lo:hi], t, side="left"))

    def pair_times(self, u, v):
        """Timestamps of all interactions between ``u`` and ``v`` in either direction."""
        key = (u, v) if u <= v else (v, u)
        return self._pair_ts.get(key, _EMPTY)

    def destination_nodes(self):
        return np.unique(self.dst)

    def subgraph(self, rows):
        """Graph restricted to the given interaction rows; node ids are kept."""
        rows = np.sort(np.asarray(rows, dtype=np.int64))
        return TemporalGraph(self.src[rows], self.dst[rows], self.ts[rows],
                             num_nodes=self.num_nodes, node_features=self.node_features,
                             edge_features=self.edge_features[rows], id_map=self.id_map)


_EMPTY = _frozen(np.zeros(0))


def slice_before(g: TemporalGraph, node: int, t: float) -> np.ndarray:
    """Interaction indices involving ``node`` with timestamp strictly below ``t``."""
    rows, _, _ = g.node_history(node)
    return rows[:g.history_cut(node, t)].copy()


# ---------------------------------------------------------------- loading

def _read_csv(path, expected_first):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path.name}: missing header", line=1) from None
        if header[:len(expected_first)] != expected_first:
            raise ParseError(f"{path.name}: header must start with {','.join(expected_first)}", line=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path.name}: expected {len(header)} fields, got {len(row)}", line=lineno)
            rows.append((lineno, row))
    return header, rows


def _read_feature_table(path, d_expected, what):
    header, rows = _read_csv(path, ["id"])
    d = len(header) - 1
    if d_expected is not None and d != d_expected:
        raise DimensionError(f"{what} feature file has {d} columns, expected {d_expected}")
    ids, vals = [], np.zeros((len(rows), d))
    for i, (lineno, row) in enumerate(rows):
        try:
            ids.append(int(row[0]))
            vals[i] = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise ParseError(f"{Path(path).name}: {exc}", line=lineno) from None
    return ids, vals


def load_graph(edge_csv_path, node_feat_path=None, edge_feat_path=None, d_N=0, d_E=0):
    """Read an edge CSV (``src,dst,ts``) plus optional feature CSVs.

    Arbitrary integer node ids are remapped densely in sorted order; the
    mapping is kept on ``graph.id_map`` (original -> dense). Interactions are
    stably sorted by timestamp, so file order decides ties. Edge feature
    rows are matched by the 0-based line index of the edge file.
    """
    _, rows = _read_csv(edge_csv_path, ["src", "dst", "ts"])
    raw_src, raw_dst, ts = [], [], []
    for lineno, row in rows:
        try:
            s, d, t = int(row[0]), int(row[1]), float(row[2])
        except ValueError as exc:
            raise ParseError(f"{Path(edge_csv_path).name}: {exc}", line=lineno) from None
        if not math.isfinite(t):
            raise ParseError("non-finite timestamp", line=lineno)
        if t < 0:
            raise ValidationError(f"line {lineno}: negative timestamp {t!r}")
        raw_src.append(s)
        raw_dst.append(d)
        ts.append(t)

    node_ids, node_vals = [], None
    if node_feat_path is not None:
        node_ids, node_vals = _read_feature_table(node_feat_path, d_N or None, "node")
    universe = sorted(set(raw_src) | set(raw_dst) | set(node_ids))
    id_map = {orig: i for i, orig in enumerate(universe)}
    n_nodes = len(universe)

    node_features = None
    if node_vals is not None:
        if len(node_ids) != n_nodes or len(set(node_ids)) != len(node_ids):
            raise DimensionError(f"node feature file has {len(node_ids)} rows for {n_nodes} nodes")
        node_features = np.zeros_like(node_vals)
        node_features[[id_map[i] for i in node_ids]] = node_vals

    edge_features = None
    if edge_feat_path is not None:
        e_ids, e_vals = _read_feature_table(edge_feat_path, d_E or None, "edge")
        if sorted(e_ids) != list(range(len(ts))):
            raise DimensionError(f"edge feature file has {len(e_ids)} rows for {len(ts)} interactions")
        edge_features = np.zeros_like(e_vals)
        edge_features[e_ids] = e_vals

    order = np.argsort(np.asarray(ts, dtype=np.float64), kind="stable")
    src = np.array([id_map[s] for s in raw_src], dtype=np.int64)[order] if rows else np.zeros(0, np.int64)
    dst = np.array([id_map[d] for d in raw_dst], dtype=np.int64)[order] if rows else np.zeros(0, np.int64)
    if edge_features is not None:
        edge_features = edge_features[order]
    return TemporalGraph(src, dst, np.asarray(ts, dtype=np.float64)[order], num_nodes=n_nodes,
                         node_features=node_features, edge_features=edge_features,
                         d_N=d_N, d_E=d_E, id_map=id_map)


def write_id_map(g: TemporalGraph, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["original_id", "node_id"])
        mapping = g.id_map if g.id_map is not None else {i: i for i in range(g.num_nodes)}
        for orig, dense in sorted(mapping.items(), key=lambda kv: kv[1]):
            w.writerow([orig, dense])


def write_edges(path, src, dst, ts):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "ts"])
        for s, d, t in zip(src, dst, ts):
            w.writerow([int(s), int(d), repr(float(t))])


# ---------------------------------------------------------------- splits

@dataclass(frozen=True)
class DataSplit:
    train: range
    val: range
    test: range
    unseen_nodes: frozenset = field(default_factory=frozenset)
    boundary_ts: tuple = (0.0, 0.0)

    def train_rows(self, g: TemporalGraph) -> np.ndarray:
        """Training interactions with every edge touching an unseen node removed."""
        rows = np.arange(self.train.start, self.train.stop)
        if not self.unseen_nodes:
            return rows
        unseen = np.fromiter(self.unseen_nodes, dtype=np.int64)
        keep = ~(np.isin(g.src[rows], unseen) | np.isin(g.dst[rows], unseen))
        return rows[keep]

    def touches_unseen(self, g: TemporalGraph, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        unseen = np.fromiter(self.unseen_nodes, dtype=np.int64)
        return np.isin(g.src[rows], unseen) | np.isin(g.dst[rows], unseen)


def _advance_past_ties(ts, b):
    while 0 < b < len(ts) and ts[b] == ts[b - 1]:
        b += 1
    return b


def chronological_split(g: TemporalGraph, ratios=(0.70, 0.15, 0.15), unseen_fraction=0.10,
                        seed=0) -> DataSplit:
    """Split the stream chronologically; equal timestamps never straddle a boundary.

    ``unseen_fraction`` of all nodes (drawn from nodes active in val/test)
    are withheld from training for the inductive setting.
    """
    r = [float(x) for x in ratios]
    if len(r) != 3 or any(x < 0 for x in r) or abs(sum(r) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    if not 0.0 <= unseen_fraction < 1.0:
        raise ConfigError(f"unseen_fraction must lie in [0, 1), got {unseen_fraction}")
    n = len(g)
    b1 = _advance_past_ties(g.ts, math.floor(r[0] * n + 1e-9))
    b2 = _advance_past_ties(g.ts, max(b1, math.floor((r[0] + r[1]) * n + 1e-9)))
    if not (0 < b1 < b2 < n):
        raise DegenerateSplitError(
            f"no valid chronological boundaries for {n} interactions (got {b1}, {b2})")

    rng = np.random.default_rng(seed)
    candidates = np.unique(np.concatenate([g.src[b1:], g.dst[b1:]]))
    count = min(int(unseen_fraction * g.num_nodes), len(candidates))
    unseen = rng.choice(candidates, size=count, replace=False) if count else np.zeros(0, np.int64)
    return DataSplit(range(0, b1), range(b1, b2), range(b2, n),
                     frozenset(int(u) for u in unseen),
                     (float(g.ts[b1 - 1]), float(g.ts[b2 - 1])))
