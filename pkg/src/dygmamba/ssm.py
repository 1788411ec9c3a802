"""Selective state-space blocks: input-dependent parameters, ZOH
discretisation, and the per-channel (SISO) scan.

The scan is a hand-written numba recurrence with a matching reverse pass.
``exp(delta * A)`` is computed by numpy in small chunks of sequences and
handed to the kernels; the backward kernel recomputes forward states per
sequence rather than storing them, which keeps memory flat in batch size.
"""

from __future__ import annotations

import numba
import numpy as np

from .errors import DimensionError, NumericError, StabilityError
from .numerics import autograd as ag
from .numerics.autograd import Tensor
from .numerics.nn import MLP, Module, apply_mlp, glorot_uniform

TAYLOR_SWITCH = 1e-6
_CHUNK = 4


class SelectiveBlock(Module):
    """One selective-scan layer of width ``C_in`` with ``d_SSM`` states per channel.

    ``A`` is kept as ``A_log`` so that ``A = -exp(A_log)`` stays negative
    under any update. Node-level layers also carry the LayerNorm and
    channel MLP of the post-scan residual; time-level layers do not
    (``with_mlp=False``).
    """

    def __init__(self, C_in, d_SSM, rng, with_mlp=True, dt_min=1e-3, dt_max=1e-1):
        super().__init__()
        if C_in < 1 or d_SSM < 1:
            raise DimensionError(f"block widths must be positive, got C_in={C_in}, d_SSM={d_SSM}")
        self.C_in, self.d_SSM = int(C_in), int(d_SSM)
        self.W_B = self.add_param("W_B", glorot_uniform(rng, C_in, d_SSM))
        self.W_C = self.add_param("W_C", glorot_uniform(rng, C_in, d_SSM))
        self.W_delta = self.add_param("W_delta", glorot_uniform(rng, C_in, 1))
        self.A_log = self.add_param("A_log", np.log(np.tile(np.arange(1.0, d_SSM + 1), (C_in, 1))))
        # step sizes start log-uniform in [dt_min, dt_max]; store softplus^-1
        dt = np.exp(rng.uniform(np.log(dt_min), np.log(dt_max), size=C_in))
        self.delta_bias = self.add_param("delta_bias", dt + np.log(-np.expm1(-dt)))
        self.with_mlp = with_mlp
        if with_mlp:
            self.ln_gain = self.add_param("ln_gain", np.ones(C_in))
            self.ln_bias = self.add_param("ln_bias", np.zeros(C_in))
            self.mlp = self.add_child("mlp", MLP((C_in, C_in, C_in), rng))

    @property
    def A(self):
        return -np.exp(self.A_log.data)

    def A_tensor(self):
        return ag.exp(self.A_log) * -1.0


def input_params(blk: SelectiveBlock, H):
    """Return ``(B, C, delta)`` for input rows ``H`` (..., L, C_in)."""
    H = ag.as_tensor(H)
    if H.shape[-1] != blk.C_in:
        raise DimensionError(f"block expects width {blk.C_in}, got {H.shape[-1]}")
    B = ag.matmul(H, blk.W_B)
    C = ag.matmul(H, blk.W_C)
    delta = ag.softplus(ag.matmul(H, blk.W_delta) + blk.delta_bias)
    return B, C, delta


def zoh_phi_exact(a, delta):
    """``(exp(delta*a) - 1) / a``, the input weight of the zero-order hold."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.expm1(delta * a) / a


def zoh_phi_taylor(a, delta):
    da = delta * a
    return delta * (1.0 + da * (0.5 + da / 6.0))


def discretize(a, b, delta):
    """Zero-order hold for one (or an array of) diagonal state entries.

    Returns ``(a_bar, b_bar)``; near ``delta * a = 0`` a third-order
    expansion replaces ``(exp(delta*a) - 1) / a``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if np.any(a >= 0):
        raise StabilityError("state matrix entries must be strictly negative")
    da = delta * a
    a_bar = np.exp(da)
    phi = np.where(np.abs(da) < TAYLOR_SWITCH, zoh_phi_taylor(a, delta), zoh_phi_exact(a, delta))
    b_bar = phi * b
    if a_bar.ndim == 0:
        return float(a_bar), float(b_bar)
    return a_bar, b_bar


# ---------------------------------------------------------------- kernels

@numba.njit(cache=True, fastmath=True)
def _scan_fwd(x, E, delta, A, B, C, mask, carry, y):
    N, L, Ch = x.shape
    S = B.shape[2]
    z = np.empty((Ch, S))
    for b in range(N):
        z[:] = 0.0
        for t in range(L):
            if not mask[b, t]:
                continue
            for c in range(Ch):
                xv = x[b, t, c]
                d = delta[b, t, c]
                acc = 0.0
                for n in range(S):
                    a = A[c, n]
                    e = E[b, t, c, n]
                    da = d * a
                    if abs(da) < TAYLOR_SWITCH:
                        p = d * (1.0 + da * (0.5 + da / 6.0))
                    else:
                        p = (e - 1.0) / a
                    zz = carry * e * z[c, n] + p * B[b, t, n] * xv
                    z[c, n] = zz
                    acc += C[b, t, n] * zz
                y[b, t, c] = acc


@numba.njit(cache=True, fastmath=True)
def _scan_bwd(x, delta, A, E, B, C, mask, carry, gy, gx, gd, gA, gB, gC):
    N, L, Ch = x.shape
    S = B.shape[2]
    gz = np.empty((Ch, S))
    zs = np.empty((L + 1, Ch, S))
    for b in range(N):
        zs[0] = 0.0
        for t in range(L):
            if not mask[b, t]:
                zs[t + 1] = zs[t]
                continue
            for c in range(Ch):
                xv = x[b, t, c]
                d = delta[b, t, c]
                for n in range(S):
                    a = A[c, n]
                    e = E[b, t, c, n]
                    da = d * a
                    if abs(da) < TAYLOR_SWITCH:
                        p = d * (1.0 + da * (0.5 + da / 6.0))
                    else:
                        p = (e - 1.0) / a
                    zs[t + 1, c, n] = carry * e * zs[t, c, n] + p * B[b, t, n] * xv
        gz[:] = 0.0
        for t in range(L - 1, -1, -1):
            if not mask[b, t]:
                continue
            for c in range(Ch):
                d = delta[b, t, c]
                xv = x[b, t, c]
                g = gy[b, t, c]
                gxa = 0.0
                gda = 0.0
                for n in range(S):
                    a = A[c, n]
                    e = E[b, t, c, n]
                    da = d * a
                    if abs(da) < TAYLOR_SWITCH:
                        p = d * (1.0 + da * (0.5 + da / 6.0))
                        dphi_d = 1.0 + da * (1.0 + 0.5 * da)
                        dphi_a = d * d * (0.5 + da / 3.0)
                    else:
                        p = (e - 1.0) / a
                        dphi_d = e
                        dphi_a = (d * e - p) / a
                    gC[b, t, n] += g * zs[t + 1, c, n]
                    gzn = gz[c, n] + C[b, t, n] * g
                    bn = B[b, t, n]
                    gab = carry * gzn * zs[t, c, n]
                    gphi = gzn * bn * xv
                    gB[b, t, n] += gzn * p * xv
                    gxa += gzn * p * bn
                    gda += gab * e * a + gphi * dphi_d
                    gA[c, n] += gab * e * d + gphi * dphi_a
                    gz[c, n] = carry * gzn * e
                gx[b, t, c] += gxa
                gd[b, t, c] += gda


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _scan_forward_arrays(x, delta, A, B, C, mask, carry):
    y = np.zeros_like(x)
    for s in range(0, x.shape[0], _CHUNK):
        sl = slice(s, s + _CHUNK)
        E = np.exp(delta[sl][..., None] * A)
        _scan_fwd(x[sl], E, delta[sl], A, B[sl], C[sl], mask[sl], carry, y[sl])
    return y


def _scan_backward_arrays(x, delta, A, B, C, mask, carry, gy):
    gx, gd = np.zeros_like(x), np.zeros_like(x)
    gA, gB, gC = np.zeros_like(A), np.zeros_like(B), np.zeros_like(C)
    for s in range(0, x.shape[0], _CHUNK):
        sl = slice(s, s + _CHUNK)
        E = np.exp(delta[sl][..., None] * A)
        _scan_bwd(x[sl], delta[sl], A, E, B[sl], C[sl], mask[sl], carry, gy[sl],
                  gx[sl], gd[sl], gA, gB[sl], gC[sl])
    return gx, gd, gA, gB, gC


def scan_op(x, delta, A, B, C, mask=None, memoryless=False):
    """Differentiable SISO scan over (N, L, C_in) inputs.

    ``mask`` (N, L) marks real steps; masked steps neither read nor update
    the state and emit 0. ``memoryless`` forces ``a_bar = 0`` (test hook).
    """
    x, delta, A, B, C = (ag.as_tensor(t) for t in (x, delta, A, B, C))
    squeeze = x.ndim == 2
    xd, dd, Bd, Cd = (_c(t.data[None] if squeeze else t.data) for t in (x, delta, B, C))
    Ad = _c(A.data)
    if np.any(Ad >= 0):
        raise StabilityError("state matrix entries must be strictly negative")
    N, L, _ = xd.shape
    m = np.ones((N, L), dtype=np.bool_) if mask is None else np.ascontiguousarray(
        np.asarray(mask, dtype=np.bool_).reshape(N, L))
    carry = 0.0 if memoryless else 1.0
    y = _scan_forward_arrays(xd, dd, Ad, Bd, Cd, m, carry)
    if not np.all(np.isfinite(y)):
        bad = ~np.isfinite(y)
        step = int(np.argmax(bad.any(axis=(0, 2))))
        raise NumericError(f"non-finite scan output at step {step}")

    def bw(g):
        g = _c(g[None] if squeeze else g)
        gx, gd, gA, gB, gC = _scan_backward_arrays(xd, dd, Ad, Bd, Cd, m, carry, g)
        if squeeze:
            gx, gd, gB, gC = gx[0], gd[0], gB[0], gC[0]
        return gx, gd, gA, gB, gC

    return ag._make(y[0] if squeeze else y, (x, delta, A, B, C), bw)


def selective_scan(blk: SelectiveBlock, H, mask=None, memoryless=False) -> Tensor:
    """SSM term for rows ``H`` (the caller adds the residual)."""
    B, C, delta = input_params(blk, H)
    return scan_op(H, delta, blk.A_tensor(), B, C, mask, memoryless)


def _identity(x):
    return x


def node_block_forward(blocks, H, mask=None, drop=_identity, scan_residual=True, counter=None):
    """Stacked node-level layers: scan residual, then LayerNorm + MLP residual.

    ``drop`` is applied to each branch before its residual add;
    ``scan_residual=False`` skips the scan term (ablation).
    """
    H = ag.as_tensor(H)
    for blk in blocks:
        if blk.C_in != H.shape[-1]:
            raise DimensionError(f"block width {blk.C_in} != input width {H.shape[-1]}")
        if scan_residual:
            H = H + drop(selective_scan(blk, H, mask))
            if counter is not None:
                counter["scan_residual"] += 1
        h = apply_mlp(blk.mlp, ag.layer_norm(H, blk.ln_gain, blk.ln_bias))
        H = H + drop(h)
    if mask is not None:
        H = H * np.asarray(mask, dtype=np.float64)[..., None]
    return H


def time_block_forward(blocks, deltas, te, f_map1, mask=None, drop=_identity, counter=None):
    """Encode co-interaction gaps, map to width ``γd``, run the scan layers.

    ``deltas`` is a ``TimeDeltaSequence`` or an array (..., k).
    """
    deltas = getattr(deltas, "deltas", deltas)
    H = drop(apply_mlp(f_map1, te(deltas)))
    for blk in blocks:
        if blk.C_in != H.shape[-1]:
            raise DimensionError(f"block width {blk.C_in} != input width {H.shape[-1]}")
        H = H + drop(selective_scan(blk, H, mask))
    if counter is not None:
        counter["time_block"] += 1
    return H
