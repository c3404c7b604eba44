"""Central-difference verification of backward passes."""

from collections.abc import Callable, Sequence

import numpy as np

from autodiff.tensor import Graph, Tensor

DEFAULT_EPS = 1e-6
RELATIVE_FLOOR = 1e-8


def finite_diff_check(
    op: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    eps: float = DEFAULT_EPS,
    seed: int = 0,
) -> float:
    """
    Compare backward gradients of ``op`` against central differences.

    The output of ``op`` is reduced to a scalar with a fixed random projection,
    so every output element contributes. Only inputs with requires_grad are
    checked; their data is restored after perturbation.

    Args:
        op: Function of the input tensors returning a tensor
        inputs: Sample inputs; keep relu-family pre-activations >= 10 * eps away from 0
        eps: Perturbation size
        seed: Seed of the projection weights

    Returns:
        max over checked components of |a - b| / max(1e-8, |a| + |b|)
    """
    with Graph():
        sample = op(*inputs)
    weights = np.random.default_rng(seed).standard_normal(sample.shape)

    for tensor in inputs:
        tensor.zero_grad()
    with Graph() as graph:
        loss = (op(*inputs) * weights).sum()
        graph.backward(loss)

    def projected() -> float:
        return float((op(*inputs).data * weights).sum())

    worst = 0.0
    for tensor in inputs:
        if not tensor.requires_grad:
            continue
        analytic = tensor.grad.copy()
        flat = tensor.data.reshape(-1)
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + eps
            upper = projected()
            flat[index] = original - eps
            lower = projected()
            flat[index] = original
            numeric = (upper - lower) / (2.0 * eps)
            a = analytic.reshape(-1)[index]
            error = abs(a - numeric) / max(RELATIVE_FLOOR, abs(a) + abs(numeric))
            worst = max(worst, error)
    return worst
