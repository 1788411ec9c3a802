"""Neighbour feature channels, patching, and projection into the SSM input.

Single-sequence functions (``assemble_bundle``, ``patch``,
``project_concat``) mirror the batched path (``build_sequence_batch`` +
``encode_batch``) used by the model; both produce identical rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .graph_store import TemporalGraph
from .numerics import autograd as ag
from .numerics.autograd import Tensor
from .numerics.nn import MLP, Module, apply_mlp
from .sampler import NeighborSequence


class TimeEncoder(Module):
    """cos-based functional time encoding with trainable frequencies and phases."""

    def __init__(self, d_T):
        super().__init__()
        if d_T < 1:
            raise DimensionError(f"d_T must be >= 1, got {d_T}")
        self.d_T = int(d_T)
        if d_T == 1:
            omega = np.ones(1)
        else:
            omega = 1.0 / 10 ** (np.arange(d_T) * 9.0 / (d_T - 1))
        self.omega = self.add_param("omega", omega)
        self.phi = self.add_param("phi", np.zeros(d_T))

    def __call__(self, deltas):
        """Encode an array of time gaps; output gains a trailing ``d_T`` axis."""
        deltas = np.asarray(deltas, dtype=np.float64)[..., None]
        scale = np.sqrt(1.0 / self.d_T)
        return ag.cos(deltas * self.omega + self.phi) * scale


def encode_time(te: TimeEncoder, delta) -> Tensor:
    return te(delta)


def frequency_mlp(d_F, rng):
    """Scalar count -> ``d_F`` features, one hidden layer of width ``d_F``."""
    return MLP((1, d_F, d_F), rng)


def encode_frequencies(freq_mlp: MLP, counts) -> Tensor:
    counts = np.asarray(counts, dtype=np.float64)
    return apply_mlp(freq_mlp, counts[..., 0:1]) + apply_mlp(freq_mlp, counts[..., 1:2])


@dataclass
class FeatureBundle:
    X: np.ndarray
    E: np.ndarray
    T: Tensor
    Fq: Tensor

    @property
    def L(self):
        return self.X.shape[0]


@dataclass
class PatchedBundle:
    Xp: Tensor
    Ep: Tensor
    Tp: Tensor
    Fp: Tensor
    p: int


def assemble_bundle(g: TemporalGraph, seq: NeighborSequence, counts, te: TimeEncoder,
                    freq_mlp: MLP) -> FeatureBundle:
    counts = np.asarray(counts, dtype=np.float64)
    L = len(seq)
    if counts.shape != (L, 2):
        raise DimensionError(f"counts must have shape ({L}, 2), got {counts.shape}")
    X = np.vstack([g.node_features[seq.neighbors], g.node_features[seq.owner][None, :]])
    E = np.vstack([g.edge_features[seq.edge_rows], np.zeros((1, g.d_E))])
    deltas = np.append(seq.query_ts - seq.ts, 0.0)
    return FeatureBundle(X, E, te(deltas), encode_frequencies(freq_mlp, counts))


def _patch_one(M, p):
    M = ag.as_tensor(M)
    L, d = M.shape
    n = -(-L // p)
    if n * p != L:
        M = ag.concat([M, np.zeros((n * p - L, d))], axis=0)
    return M.reshape(n, p * d)


def patch(bundle: FeatureBundle, p: int) -> PatchedBundle:
    """Group ``p`` consecutive rows into one; zero rows pad the tail."""
    if p < 1:
        raise DimensionError(f"patch size must be >= 1, got {p}")
    return PatchedBundle(_patch_one(bundle.X, p), _patch_one(bundle.E, p),
                         _patch_one(bundle.T, p), _patch_one(bundle.Fq, p), p)


def unpatch(M, p, L):
    """Inverse of patching for one channel: split rows and drop the padding."""
    M = np.asarray(M.data if isinstance(M, Tensor) else M)
    return M.reshape(M.shape[0] * p, M.shape[1] // p)[:L]


def project_concat(pb: PatchedBundle, f_N: MLP, f_E: MLP, f_T: MLP, f_F: MLP) -> Tensor:
    parts = []
    for M, f in ((pb.Xp, f_N), (pb.Ep, f_E), (pb.Tp, f_T), (pb.Fp, f_F)):
        if M.shape[-1] != f.in_width:
            raise DimensionError(f"patched width {M.shape[-1]} != projection input {f.in_width}")
        parts.append(apply_mlp(f, M))
    widths = {f.out_width for f in (f_N, f_E, f_T, f_F)}
    if len(widths) != 1:
        raise DimensionError(f"projection outputs must share one width, got {sorted(widths)}")
    return ag.concat(parts, axis=-1)


# ---------------------------------------------------------------- batched path

@dataclass
class SequenceBatch:
    """Left-aligned-by-padding batch of neighbour sequences at row level.

    Sequence ``i`` occupies the trailing ``n_i * p`` rows of its slot:
    ``L_i`` real rows followed by zero patch padding. Leading slots are
    batch padding and are masked out of every sequence-mixing op.
    """

    X: np.ndarray            # (B, R, d_N) node features
    E: np.ndarray            # (B, R, d_E) edge features
    deltas: np.ndarray       # (B, R) query_ts - entry ts
    counts: np.ndarray       # (B, R, 2)
    real: np.ndarray         # (B, R) bool, real (non-padding) rows
    mask: np.ndarray         # (B, R // p) bool, patches holding real rows
    p: int


def build_sequence_batch(g: TemporalGraph, seqs, counts_list, p: int) -> SequenceBatch:
    lengths = [len(s) for s in seqs]
    n_patches = [-(-L // p) for L in lengths]
    P = max(n_patches)
    R = P * p
    B = len(seqs)
    X = np.zeros((B, R, g.d_N))
    E = np.zeros((B, R, g.d_E))
    deltas = np.zeros((B, R))
    counts = np.zeros((B, R, 2))
    real = np.zeros((B, R), dtype=bool)
    mask = np.zeros((B, P), dtype=bool)
    for i, (seq, c, L, n) in enumerate(zip(seqs, counts_list, lengths, n_patches)):
        lo = (P - n) * p
        sl = slice(lo, lo + L)
        nb = len(seq.neighbors)
        X[i, lo:lo + nb] = g.node_features[seq.neighbors]
        X[i, lo + nb] = g.node_features[seq.owner]
        E[i, lo:lo + nb] = g.edge_features[seq.edge_rows]
        deltas[i, lo:lo + nb] = seq.query_ts - seq.ts
        counts[i, sl] = c
        real[i, sl] = True
        mask[i, P - n:] = True
    return SequenceBatch(X, E, deltas, counts, real, mask, p)


def _identity(x):
    return x


def encode_batch(batch: SequenceBatch, te: TimeEncoder, freq_mlp: MLP, f_N, f_E, f_T, f_F,
                 drop=_identity) -> Tensor:
    """Feature channels -> patches -> projected ``H`` of shape (B, P, 4d)."""
    B, R = batch.real.shape
    p = batch.p
    P = R // p
    keep = batch.real[..., None].astype(np.float64)
    T = te(batch.deltas) * keep
    Fq = drop(encode_frequencies(freq_mlp, batch.counts)) * keep
    chans = [batch.X.reshape(B, P, -1), batch.E.reshape(B, P, -1),
             T.reshape(B, P, -1), Fq.reshape(B, P, -1)]
    pb = PatchedBundle(*chans, p=p)
    return drop(project_concat(pb, f_N, f_E, f_T, f_F))
