"""Edge-specific temporal pattern and the pattern-guided selection over
each endpoint's encoded neighbours.

All functions accept either a single query (``H`` of shape (L, 4d)) or a
batch (``H`` of shape (B, L, 4d)) with an optional (B, L) row mask.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .numerics import autograd as ag
from .numerics.nn import MLP, Module, apply_mlp


def _identity(x):
    return x


class SelectionHead(Module):
    def __init__(self, width, time_width, d_out, rng):
        super().__init__()
        self.width, self.time_width, self.d_out = width, time_width, d_out
        self.f_map2 = self.add_child("f_map2", MLP((time_width, width), rng))
        self.f_map3 = self.add_child("f_map3", MLP((width, 1), rng))
        self.f_agg = self.add_child("f_agg", MLP((width, width, width), rng))
        self.f_out1 = self.add_child("f_out1", MLP((width, d_out), rng))
        self.f_out2 = self.add_child("f_out2", MLP((time_width, d_out), rng))


def temporal_pattern(H_uv):
    """Mean over the ``k`` rows of the time-level output."""
    H_uv = ag.as_tensor(H_uv)
    if H_uv.shape[-2] < 1:
        raise DimensionError("temporal pattern needs at least one row")
    return H_uv.mean(axis=-2)


def _row_weights(mask, H):
    if mask is None:
        return None
    m = np.asarray(mask, dtype=bool)
    if m.shape != H.shape[:-1]:
        raise DimensionError(f"mask shape {m.shape} != rows {H.shape[:-1]}")
    return m


def masked_mean(H, mask=None):
    """Row mean over real rows only (mean-pooling ablation)."""
    H = ag.as_tensor(H)
    m = _row_weights(mask, H)
    if m is None:
        return H.mean(axis=-2)
    w = m / m.sum(axis=-1, keepdims=True)
    return (H * w[..., None]).sum(axis=-2)


def _aggregate(head, H, m, drop):
    w = drop(apply_mlp(head.f_map3, H))
    if m is not None:
        w = w * m[..., None].astype(np.float64)
    return (H * w).sum(axis=-2)


def _pick(H, alpha, m):
    alpha = alpha.reshape(alpha.shape[:-1] + (1, alpha.shape[-1]))
    beta = ag.softmax((H * alpha).sum(axis=-1), mask=m)
    return (H * beta.reshape(beta.shape + (1,))).sum(axis=-2), beta


def select(head: SelectionHead, H_u, H_v, h_uv, mask_u=None, mask_v=None, drop=_identity,
           return_weights=False):
    """Pattern-guided pooling of ``H_u`` and ``H_v`` into one vector each."""
    H_u, H_v, h_uv = ag.as_tensor(H_u), ag.as_tensor(H_v), ag.as_tensor(h_uv)
    for name, H in (("H_u", H_u), ("H_v", H_v)):
        if H.shape[-1] != head.width:
            raise DimensionError(f"{name} width {H.shape[-1]} != {head.width}")
        if H.shape[-2] < 1:
            raise DimensionError(f"{name} has no rows")
    if h_uv.shape[-1] != head.time_width:
        raise DimensionError(f"h_uv width {h_uv.shape[-1]} != {head.time_width}")
    m_u, m_v = _row_weights(mask_u, H_u), _row_weights(mask_v, H_v)
    ht_uv = drop(apply_mlp(head.f_map2, h_uv))
    ht_u = _aggregate(head, H_u, m_u, drop)
    ht_v = _aggregate(head, H_v, m_v, drop)
    alpha_u = drop(apply_mlp(head.f_agg, ht_v)) * ht_uv
    alpha_v = drop(apply_mlp(head.f_agg, ht_u)) * ht_uv
    h_u, beta_u = _pick(H_u, alpha_u, m_u)
    h_v, beta_v = _pick(H_v, alpha_v, m_v)
    if return_weights:
        return h_u, h_v, beta_u, beta_v
    return h_u, h_v


def output_heads(head: SelectionHead, h_u, h_v, h_uv, drop=_identity):
    o_u = drop(apply_mlp(head.f_out1, h_u))
    o_v = drop(apply_mlp(head.f_out1, h_v))
    o_uv = drop(apply_mlp(head.f_out2, h_uv))
    return o_u, o_v, o_uv
