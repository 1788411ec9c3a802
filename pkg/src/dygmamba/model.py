"""End-to-end link predictor: neighbour sequences -> node-level SSM ->
time-level SSM over co-interaction gaps -> pattern-guided selection ->
link probability.

``DyGMambaModel.predict_batch`` is the workhorse: it scores many queries at
once by padding sequences to a common patched length and masking padding
out of every sequence-mixing op. ``forward_query`` runs one query through
the unbatched single-sequence path; both produce the same probability.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, fields

import numpy as np

from .encoders import (
    TimeEncoder,
    assemble_bundle,
    build_sequence_batch,
    encode_batch,
    frequency_mlp,
    patch,
    project_concat,
)
from .errors import BatchError, CheckpointError, ConfigError, DimensionError
from .graph_store import TemporalGraph
from .numerics import autograd as ag
from .numerics.checkpoint import load_checkpoint, save_checkpoint
from .numerics.nn import MLP, Module, apply_mlp, dropout
from .sampler import co_interaction_deltas, cooccurrence_counts, pair_history_count, recent_neighbors
from .selector import SelectionHead, masked_mean, output_heads, select, temporal_pattern
from .ssm import SelectiveBlock, node_block_forward, time_block_forward

VARIANTS = ("full", "A", "B")
PROB_CLAMP = 1e-12


@dataclass
class ModelConfig:
    rho: int = 32
    p: int = 1
    k: int = 10
    d: int = 50
    d_SSM: int = 16
    gamma: float = 0.5
    l_N: int = 2
    l_T: int = 2
    d_N: int = 172
    d_E: int = 172
    d_T: int = 100
    d_F: int = 50
    dropout: float = 0.1
    variant: str = "full"
    seed: int = 0

    def __post_init__(self):
        self.variant = _normalize_variant(self.variant)
        self.validate()

    @property
    def width(self):
        return 4 * self.d

    @property
    def time_width(self):
        return max(1, math.floor(self.gamma * self.d))

    def validate(self):
        ints = {"rho": 1, "p": 1, "k": 1, "d": 1, "d_SSM": 1, "l_N": 0, "l_T": 0,
                "d_N": 1, "d_E": 0, "d_T": 1, "d_F": 1}
        for name, lo in ints.items():
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < lo:
                raise ConfigError(f"{name} must be an integer >= {lo}, got {v!r}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


def _normalize_variant(v):
    v = str(v)
    return v.upper() if v.lower() in ("a", "b") else v.lower()


class DyGMambaModel(Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = c = config
        rng = np.random.default_rng(c.seed)
        full = c.variant != "A"
        self.te = self.add_child("te", TimeEncoder(c.d_T))
        self.freq = self.add_child("freq", frequency_mlp(c.d_F, rng))
        self.f_N = self.add_child("f_N", MLP((c.p * c.d_N, c.d), rng))
        self.f_E = self.add_child("f_E", MLP((c.p * c.d_E, c.d), rng))
        self.f_T = self.add_child("f_T", MLP((c.p * c.d_T, c.d), rng))
        self.f_F = self.add_child("f_F", MLP((c.p * c.d_F, c.d), rng))
        self.node_blocks = [self.add_child(f"node{i}", SelectiveBlock(c.width, c.d_SSM, rng))
                            for i in range(c.l_N)]
        self.time_blocks = []
        if full:
            self.f_map1 = self.add_child("f_map1", MLP((c.d_T, c.time_width), rng))
            self.time_blocks = [
                self.add_child(f"time{i}", SelectiveBlock(c.time_width, c.d_SSM, rng, with_mlp=False))
                for i in range(c.l_T)]
            self.head = self.add_child("head", SelectionHead(c.width, c.time_width, c.d_N, rng))
        else:
            self.f_out1 = self.add_child("f_out1", MLP((c.width, c.d_N), rng))
        n_out = 3 if full else 2
        self.f_LP = self.add_child("f_LP", MLP((n_out * c.d_N, c.d_N, 1), rng))
        # zero output layer: an untrained model scores every query at exactly 0.5
        self.f_LP.layers[-1][0].data[:] = 0.0
        self.training = False
        self.dropout_rng = np.random.default_rng([c.seed, 1])
        self.counters = Counter(time_block=0, scan_residual=0)

    # -------------------------------------------------------------- helpers

    def train(self, mode=True):
        self.training = mode
        return self

    def eval(self):
        return self.train(False)

    def _drop(self, x):
        return dropout(x, self.config.dropout, self.dropout_rng, self.training)

    def check_graph(self, g: TemporalGraph):
        c = self.config
        if g.d_N != c.d_N or g.d_E != c.d_E:
            raise DimensionError(
                f"graph features (d_N={g.d_N}, d_E={g.d_E}) != model (d_N={c.d_N}, d_E={c.d_E})")

    def _raw_inputs(self, g, u, v, t):
        c = self.config
        g.check_node(u)
        g.check_node(v)
        seq_u = recent_neighbors(g, u, t, c.rho)
        seq_v = recent_neighbors(g, v, t, c.rho)
        cu, cv = cooccurrence_counts(seq_u, seq_v, pair_history_count(g, u, v, t))
        deltas = co_interaction_deltas(g, u, v, t, c.k)
        return seq_u, seq_v, cu, cv, deltas

    def _link(self, H_u, H_v, deltas, m_u=None, m_v=None):
        """Shared tail from node-level outputs to the link logit."""
        drop = self._drop
        if self.config.variant == "A":
            o_u = drop(apply_mlp(self.f_out1, masked_mean(H_u, m_u)))
            o_v = drop(apply_mlp(self.f_out1, masked_mean(H_v, m_v)))
            z = ag.concat([o_u, o_v], axis=-1)
        else:
            H_uv = time_block_forward(self.time_blocks, deltas, self.te, self.f_map1,
                                      drop=drop, counter=self.counters)
            h_uv = temporal_pattern(H_uv)
            h_u, h_v = select(self.head, H_u, H_v, h_uv, m_u, m_v, drop=drop)
            z = ag.concat(list(output_heads(self.head, h_u, h_v, h_uv, drop=drop)), axis=-1)
        return apply_mlp(self.f_LP, z)

    def _node_level(self, H, mask=None):
        return node_block_forward(self.node_blocks, H, mask, drop=self._drop,
                                  scan_residual=self.config.variant != "B", counter=self.counters)

    # -------------------------------------------------------------- forward

    def forward_query(self, g: TemporalGraph, u, v, t):
        """Probability tensor for one query via the unbatched path."""
        self.check_graph(g)
        c = self.config
        seq_u, seq_v, cu, cv, deltas = self._raw_inputs(g, u, v, t)
        Hs = []
        for seq, counts in ((seq_u, cu), (seq_v, cv)):
            bundle = assemble_bundle(g, seq, counts, self.te, self.freq)
            bundle.Fq = self._drop(bundle.Fq)
            pb = patch(bundle, c.p)
            H = self._drop(project_concat(pb, self.f_N, self.f_E, self.f_T, self.f_F))
            Hs.append(self._node_level(H))
        logit = self._link(Hs[0], Hs[1], deltas.deltas)
        return ag.sigmoid(logit.reshape(()))

    def predict_batch(self, g: TemporalGraph, us, vs, ts):
        """Probability tensor (B,) for queries ``(us[i], vs[i], ts[i])``."""
        self.check_graph(g)
        n = len(us)
        if n == 0 or len(vs) != n or len(ts) != n:
            raise BatchError("query batch must be non-empty with aligned u, v, t")
        seqs_u, seqs_v, cus, cvs, deltas = [], [], [], [], []
        for u, v, t in zip(us, vs, ts):
            su, sv, cu, cv, dl = self._raw_inputs(g, int(u), int(v), float(t))
            seqs_u.append(su)
            seqs_v.append(sv)
            cus.append(cu)
            cvs.append(cv)
            deltas.append(dl.deltas)
        batch = build_sequence_batch(g, seqs_u + seqs_v, cus + cvs, self.config.p)
        H = encode_batch(batch, self.te, self.freq, self.f_N, self.f_E, self.f_T, self.f_F,
                         drop=self._drop)
        H = self._node_level(H, batch.mask)
        logit = self._link(H[:n], H[n:], np.stack(deltas), batch.mask[:n], batch.mask[n:])
        return ag.sigmoid(logit.reshape(n))

    def predict_proba(self, g, us, vs, ts, batch_size=200):
        """Eval-mode probabilities as a numpy array, scored in chunks."""
        prev = self.training
        self.eval()
        out = []
        try:
            with ag.no_grad():
                for s in range(0, len(us), batch_size):
                    sl = slice(s, s + batch_size)
                    out.append(self.predict_batch(g, us[sl], vs[sl], ts[sl]).data)
        finally:
            self.train(prev)
        return np.concatenate(out) if out else np.zeros(0)

    def forward(self, g, u, v, t):
        """Eval-mode probability of the link ``(u, v, t)`` as a float."""
        return float(self.predict_proba(g, [u], [v], [t])[0])

    # -------------------------------------------------------------- persistence

    def save(self, path, extra=None):
        header = {"format": "dygmamba-model", "config": self.config.to_dict()}
        if extra:
            header["extra"] = extra
        save_checkpoint(path, self.state_dict(), header)


def init_model(config: ModelConfig) -> DyGMambaModel:
    config.validate()
    return DyGMambaModel(config)


def load_model(path) -> DyGMambaModel:
    header, arrays = load_checkpoint(path)
    if header.get("format") != "dygmamba-model" or "config" not in header:
        raise CheckpointError(f"{path}: not a model checkpoint")
    model = DyGMambaModel(ModelConfig.from_dict(header["config"]))
    try:
        model.load_state_dict(arrays)
    except DimensionError as exc:
        raise CheckpointError(f"{path}: {exc}") from None
    return model


def bce_loss(probs, labels):
    """Mean binary cross-entropy with probabilities clamped away from 0 and 1."""
    labels = np.asarray(labels, dtype=np.float64)
    p = ag.clamp(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    ll = ag.log(p) * labels + ag.log(1.0 - p) * (1.0 - labels)
    return ll.mean() * -1.0


def batch_loss(model: DyGMambaModel, g: TemporalGraph, positives, negatives):
    """BCE over positives (label 1) and equally many negatives (label 0)."""
    if len(positives) == 0:
        raise BatchError("empty batch")
    if len(negatives) != len(positives):
        raise BatchError(f"{len(positives)} positives but {len(negatives)} negatives")
    q = list(positives) + list(negatives)
    us, vs, ts = zip(*q)
    probs = model.predict_batch(g, us, vs, ts)
    labels = np.r_[np.ones(len(positives)), np.zeros(len(negatives))]
    return bce_loss(probs, labels)
