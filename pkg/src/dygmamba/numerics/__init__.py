from .autograd import (
    Tensor,
    as_tensor,
    backward,
    clamp,
    concat,
    cos,
    exp,
    layer_norm,
    log,
    matmul,
    mean,
    no_grad,
    reshape,
    sigmoid,
    silu,
    softmax,
    softplus,
    tanh,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .nn import MLP, Module, Parameter, apply_mlp, dropout, glorot_uniform
from .optim import Adam, adam_step

__all__ = [
    "Tensor", "as_tensor", "backward", "clamp", "concat", "cos", "exp", "layer_norm", "log",
    "matmul", "mean", "no_grad", "reshape", "sigmoid", "silu", "softmax", "softplus", "tanh",
    "load_checkpoint", "save_checkpoint", "MLP", "Module", "Parameter", "apply_mlp", "dropout",
    "glorot_uniform", "Adam", "adam_step",
]
