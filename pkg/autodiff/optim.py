"""Adam optimizer with bias-corrected moment estimates."""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from autodiff.tensor import Tensor, zero_grads
from shared.errors import ConfigurationError

DEFAULT_LEARNING_RATE = 0.005
DEFAULT_BETA1 = 0.5
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


@dataclass
class AdamState:
    """Per-parameter moment accumulators and the shared step counter."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate", "must be positive")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigurationError(name, f"must be in (0, 1), got {value}")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon", "must be positive")

    @classmethod
    def for_params(cls, params: Sequence[Tensor], **hyper) -> "AdamState":
        return cls(
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
            **hyper,
        )


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: AdamState) -> AdamState:
    """
    Apply one Adam update in place.

    Args:
        params: Parameter tensors, updated in place
        grads: Gradients aligned with params
        state: Moment accumulators aligned with params; t is advanced by one

    Returns:
        The same state object, for chaining
    """
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]

    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t

    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)

    return state


class Adam:
    """Optimizer bound to a fixed list of parameters."""

    def __init__(
        self,
        params: Sequence[Tensor],
        learning_rate: float = DEFAULT_LEARNING_RATE,
        beta1: float = DEFAULT_BETA1,
        beta2: float = DEFAULT_BETA2,
        epsilon: float = DEFAULT_EPSILON,
    ):
        self.params = list(params)
        self.state = AdamState.for_params(
            self.params,
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )

    def step(self) -> None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        adam_step(self.params, grads, self.state)

    def zero_grad(self) -> None:
        zero_grads(self.params)
