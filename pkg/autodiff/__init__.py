"""Minimal reverse-mode automatic differentiation for the CropGAN networks."""

from .functional import (
    RunningStats,
    activation,
    batch_norm,
    binary_cross_entropy,
    clamped_log,
    conv2d,
    dense,
    flatten,
    instance_norm,
    l1_distance,
    leaky_relu,
    relu,
    sigmoid,
    transposed_conv2d,
)
from .gradcheck import finite_diff_check
from .optim import Adam, AdamState, adam_step
from .tensor import Graph, Tensor, as_tensor, current_graph, zero_grads

__all__ = [
    "Tensor",
    "Graph",
    "as_tensor",
    "current_graph",
    "zero_grads",
    "conv2d",
    "transposed_conv2d",
    "activation",
    "relu",
    "leaky_relu",
    "sigmoid",
    "instance_norm",
    "batch_norm",
    "RunningStats",
    "dense",
    "flatten",
    "l1_distance",
    "clamped_log",
    "binary_cross_entropy",
    "Adam",
    "AdamState",
    "adam_step",
    "finite_diff_check",
]
