"""Parameters, parameter containers, and the MLP used for every learned map."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError
from . import autograd as ag
from .autograd import Tensor

ACTIVATIONS = {"silu": ag.silu, "none": None}


class Parameter(Tensor):
    """A named trainable leaf; ``grad`` always has the value's shape."""

    __slots__ = ()

    def __init__(self, value, name=""):
        super().__init__(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)


class Module:
    """Ordered registry of parameters and sub-modules.

    Registration order fixes ``named_parameters`` order, which fixes both
    initialisation draws and checkpoint layout.
    """

    def __init__(self):
        self._params = {}
        self._children = {}

    def add_param(self, name, value):
        p = Parameter(value, name)
        self._params[name] = p
        return p

    def add_child(self, name, module):
        self._children[name] = module
        return module

    def named_parameters(self, prefix=""):
        for name, p in self._params.items():
            yield prefix + name, p
        for name, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{name}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self):
        return {n: p.data.copy() for n, p in self.named_parameters()}

    def load_state_dict(self, state):
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing, extra = set(own) - set(state), set(state) - set(own)
            raise DimensionError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for n, p in own.items():
            v = np.asarray(state[n], dtype=np.float64)
            if v.shape != p.shape:
                raise DimensionError(f"{n}: shape {v.shape} != {p.shape}")
            p.data = v.copy()

    def num_parameters(self):
        return sum(p.size for p in self.parameters())


def glorot_uniform(rng, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class MLP(Module):
    """Affine layers with per-layer activation, applied over the last axis."""

    def __init__(self, widths, rng, hidden_activation="silu", final_activation="none"):
        super().__init__()
        if len(widths) < 2:
            raise DimensionError("an MLP needs at least input and output widths")
        self.widths = tuple(int(w) for w in widths)
        self.activations = []
        for i, (fi, fo) in enumerate(zip(self.widths[:-1], self.widths[1:])):
            self.add_param(f"W{i}", glorot_uniform(rng, fi, fo))
            self.add_param(f"b{i}", np.zeros(fo))
            last = i == len(self.widths) - 2
            self.activations.append(final_activation if last else hidden_activation)

    @property
    def in_width(self):
        return self.widths[0]

    @property
    def out_width(self):
        return self.widths[-1]

    @property
    def layers(self):
        return [(self._params[f"W{i}"], self._params[f"b{i}"], act)
                for i, act in enumerate(self.activations)]

    def __call__(self, x):
        return apply_mlp(self, x)


def apply_mlp(m: MLP, x):
    x = ag.as_tensor(x)
    if x.shape[-1] != m.in_width:
        raise DimensionError(f"MLP expects width {m.in_width}, got {x.shape[-1]}")
    for W, b, act in m.layers:
        x = ag.matmul(x, W) + b
        fn = ACTIVATIONS[act]
        if fn is not None:
            x = fn(x)
    return x


def dropout(x, rate, rng, training):
    """Inverted dropout; identity outside training or at rate 0."""
    if not training or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep
