"""Builders for the generator, discriminator and crop mapper architectures.

Every network takes (N, 9, 6, 1) reflectance tensors. Layers are grouped into
named stages whose output shapes follow the architecture tables; the final
ReLU of the generator is folded into its last decoder stage.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from autodiff import functional as fn
from autodiff.tensor import Tensor, as_tensor
from shared.errors import DimensionError, UsageError

INPUT_SHAPE = (9, 6, 1)
INIT_STD = 0.02

ROLE_GENERATOR_G = "generator-G"
ROLE_GENERATOR_F = "generator-F"
ROLE_DISCRIMINATOR_X = "discriminator-X"
ROLE_DISCRIMINATOR_Y = "discriminator-Y"
ROLE_CROP_MAPPER = "crop-mapper"
ROLES = (
    ROLE_GENERATOR_G,
    ROLE_GENERATOR_F,
    ROLE_DISCRIMINATOR_X,
    ROLE_DISCRIMINATOR_Y,
    ROLE_CROP_MAPPER,
)

# Encoder convs and decoder transposed convs share one kernel geometry
CODEC_KERNEL = (3, 2)
GENERATOR_CHANNELS = (1, 4, 8, 16, 32)


class Layer:
    """A differentiable step inside a stage."""

    kind = "layer"

    def params(self) -> list[Tensor]:
        return []

    def buffers(self) -> list[np.ndarray]:
        return []

    def load_buffers(self, arrays: Sequence[np.ndarray]) -> None:
        pass

    def __call__(self, x: Tensor, mode: str) -> Tensor:
        raise NotImplementedError


@dataclass
class Conv(Layer):
    kernels: Tensor
    bias: Tensor
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)
    transposed: bool = False

    @property
    def kind(self) -> str:
        return "transposed_conv" if self.transposed else "conv"

    def params(self) -> list[Tensor]:
        return [self.kernels, self.bias]

    def __call__(self, x: Tensor, mode: str) -> Tensor:
        op = fn.transposed_conv2d if self.transposed else fn.conv2d
        return op(x, self.kernels, self.bias, self.stride, self.padding)


@dataclass
class InstanceNorm(Layer):
    gain: Tensor
    shift: Tensor
    kind = "instance_norm"

    def params(self) -> list[Tensor]:
        return [self.gain, self.shift]

    def __call__(self, x: Tensor, mode: str) -> Tensor:
        return fn.instance_norm(x, self.gain, self.shift)


@dataclass
class BatchNorm(Layer):
    gain: Tensor
    shift: Tensor
    running: fn.RunningStats
    kind = "batch_norm"

    def params(self) -> list[Tensor]:
        return [self.gain, self.shift]

    def buffers(self) -> list[np.ndarray]:
        return [self.running.mean, self.running.var]

    def load_buffers(self, arrays: Sequence[np.ndarray]) -> None:
        self.running.mean = np.array(arrays[0], dtype=np.float64)
        self.running.var = np.array(arrays[1], dtype=np.float64)

    def __call__(self, x: Tensor, mode: str) -> Tensor:
        return fn.batch_norm(x, self.gain, self.shift, self.running, mode)


@dataclass
class Activation(Layer):
    name: str
    kind = "activation"

    def __call__(self, x: Tensor, mode: str) -> Tensor:
        return fn.activation(self.name, x)


@dataclass
class Dense(Layer):
    weights: Tensor
    bias: Tensor
    kind = "dense"

    def params(self) -> list[Tensor]:
        return [self.weights, self.bias]

    def __call__(self, x: Tensor, mode: str) -> Tensor:
        return fn.dense(x, self.weights, self.bias)


class Flatten(Layer):
    kind = "flatten"

    def __call__(self, x: Tensor, mode: str) -> Tensor:
        return fn.flatten(x)


@dataclass
class Stage:
    """A row of an architecture table: a name, its layers and its output shape."""

    name: str
    layers: list[Layer]
    output_shape: tuple[int, ...]


@dataclass
class Network:
    """Ordered stages with a role tag; parameters are mutated only by optimizers."""

    role: str
    stages: list[Stage]
    input_shape: tuple[int, ...] = INPUT_SHAPE
    epoch: int = 0
    metadata: dict[str, str] = field(default_factory=dict)

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.stages[-1].output_shape

    @property
    def layers(self) -> list[Layer]:
        return [layer for stage in self.stages for layer in stage.layers]

    def forward(
        self,
        x,
        mode: str = "train",
        trace: list | None = None,
        until: str | None = None,
    ) -> Tensor:
        """
        Run the network on a batch.

        Args:
            x: (N, 9, 6, 1) batch, or (N, 9, 6) which gains a channel axis
            mode: "train" or "eval"; only batch norm distinguishes them
            trace: If given, per-sample shapes are appended (input first, then one per stage)
            until: Stop after the named stage and return its output

        Raises:
            DimensionError: Input samples are not 9x6x1
        """
        x = as_tensor(x)
        if x.ndim == 3:
            x = x.reshape((*x.shape, 1))
        if x.ndim != 4 or x.shape[1:] != self.input_shape:
            raise DimensionError(self.role, f"(N, {', '.join(map(str, self.input_shape))})", x.shape)
        if trace is not None:
            trace.append(x.shape[1:])
        for stage in self.stages:
            for layer in stage.layers:
                x = layer(x, mode)
            if trace is not None:
                trace.append(x.shape[1:])
            if stage.name == until:
                return x
        if until is not None:
            raise UsageError(f"{self.role} has no stage named {until!r}")
        return x

    __call__ = forward

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.params()]

    def buffers(self) -> list[np.ndarray]:
        return [b for layer in self.layers for b in layer.buffers()]

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def shape_trace(self) -> list[tuple[int, ...]]:
        """Per-sample shapes of the input and of every stage output."""
        trace: list = []
        self.forward(np.zeros((2, *self.input_shape)), mode="eval", trace=trace)
        return trace

    def state_arrays(self) -> list[np.ndarray]:
        """Copies of all parameters followed by all buffers, in layer order."""
        return [p.data.copy() for p in self.parameters()] + [b.copy() for b in self.buffers()]

    def load_state_arrays(self, arrays: Sequence[np.ndarray]) -> None:
        """Overwrite parameters and buffers from arrays laid out as in state_arrays()."""
        params = self.parameters()
        expected = [p.shape for p in params] + [b.shape for b in self.buffers()]
        actual = [tuple(a.shape) for a in arrays]
        if actual != expected:
            raise DimensionError(f"{self.role} state", expected, actual)
        for p, a in zip(params, arrays):
            p.data[...] = a
        rest = list(arrays[len(params) :])
        for layer in self.layers:
            count = len(layer.buffers())
            if count:
                layer.load_buffers(rest[:count])
                rest = rest[count:]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


def _normal(rng: np.random.Generator, shape) -> Tensor:
    return Tensor(rng.normal(0.0, INIT_STD, size=shape), requires_grad=True)


def _zeros(size: int) -> Tensor:
    return Tensor(np.zeros(size), requires_grad=True)


def _ones(size: int) -> Tensor:
    return Tensor(np.ones(size), requires_grad=True)


def _conv(rng, kernel, c_in, c_out, stride=(1, 1), padding=(0, 0)) -> Conv:
    return Conv(_normal(rng, (*kernel, c_in, c_out)), _zeros(c_out), stride, padding)


def _transposed(rng, kernel, c_in, c_out) -> Conv:
    # stored in the layout of the conv it transposes: (kh, kw, c_out, c_in)
    return Conv(_normal(rng, (*kernel, c_out, c_in)), _zeros(c_out), transposed=True)


def _instance_norm(channels: int) -> InstanceNorm:
    return InstanceNorm(_ones(channels), _zeros(channels))


def _batch_norm(channels: int) -> BatchNorm:
    return BatchNorm(_ones(channels), _zeros(channels), fn.RunningStats.fresh(channels))


def build_generator(seed: int, role: str = ROLE_GENERATOR_G) -> Network:
    """
    Encoder-decoder generator: 9x6x1 -> 1x2x32 -> 9x6x1.

    Each encoder stage is conv + instance norm + LeakyReLU; each decoder stage
    is transposed conv + instance norm + LeakyReLU. The last decoder stage
    ends with the output ReLU.
    """
    rng = np.random.default_rng(seed)
    shapes = [(7, 5), (5, 4), (3, 3), (1, 2)]
    stages = []
    channels = GENERATOR_CHANNELS
    for index in range(4):
        c_in, c_out = channels[index], channels[index + 1]
        stages.append(
            Stage(
                f"Encoder {index + 1}",
                [
                    _conv(rng, CODEC_KERNEL, c_in, c_out),
                    _instance_norm(c_out),
                    Activation("leaky_relu"),
                ],
                (*shapes[index], c_out),
            )
        )
    decoder_shapes = [(3, 3), (5, 4), (7, 5), (9, 6)]
    for step, index in enumerate(range(4, 0, -1)):
        c_in, c_out = channels[index], channels[index - 1]
        layers = [
            _transposed(rng, CODEC_KERNEL, c_in, c_out),
            _instance_norm(c_out),
            Activation("leaky_relu"),
        ]
        if index == 1:
            layers.append(Activation("relu"))
        stages.append(Stage(f"Decoder {index}", layers, (*decoder_shapes[step], c_out)))
    return Network(role=role, stages=stages)


def build_discriminator(seed: int, role: str = ROLE_DISCRIMINATOR_Y) -> Network:
    """
    Patch-free discriminator: 9x6x1 -> 9x6x4 -> 4x3x8 -> 2x1x16 -> 1x1x1 -> (0, 1).

    The conv stages apply conv, LeakyReLU and then instance norm, in table order.
    """
    rng = np.random.default_rng(seed)
    stages = [
        Stage(
            "Conv 1",
            [_conv(rng, (3, 3), 1, 4, padding=(1, 1)), Activation("leaky_relu"), _instance_norm(4)],
            (9, 6, 4),
        ),
        Stage(
            "Conv 2",
            [_conv(rng, (2, 2), 4, 8, stride=(2, 2)), Activation("leaky_relu"), _instance_norm(8)],
            (4, 3, 8),
        ),
        Stage(
            "Conv 3",
            [
                _conv(rng, (2, 2), 8, 16, stride=(2, 2)),
                Activation("leaky_relu"),
                _instance_norm(16),
            ],
            (2, 1, 16),
        ),
        Stage("Conv 4", [_conv(rng, (2, 1), 16, 1), Activation("leaky_relu")], (1, 1, 1)),
        Stage("Output", [Flatten(), Activation("sigmoid")], (1,)),
    ]
    return Network(role=role, stages=stages)


def build_crop_mapper(seed: int) -> Network:
    """
    CNN crop classifier: conv stack to 2x1x4, flatten to 8, dense 8 -> 4 -> 1, sigmoid.

    The output is the probability that the pixel is corn.
    """
    rng = np.random.default_rng(seed)
    stages = [
        Stage(
            "Conv 1",
            [_conv(rng, (3, 3), 1, 2, padding=(1, 1)), Activation("relu"), _batch_norm(2)],
            (9, 6, 2),
        ),
        Stage(
            "Conv 2",
            [_conv(rng, (2, 2), 2, 2, stride=(2, 2)), Activation("relu"), _batch_norm(2)],
            (4, 3, 2),
        ),
        Stage(
            "Conv 3",
            [_conv(rng, (2, 2), 2, 4, stride=(2, 2)), Activation("relu"), _batch_norm(4)],
            (2, 1, 4),
        ),
        Stage("Flatten", [Flatten()], (8,)),
        Stage("FC 1", [Dense(_normal(rng, (8, 4)), _zeros(4)), Activation("relu")], (4,)),
        Stage("FC 2", [Dense(_normal(rng, (4, 1)), _zeros(1))], (1,)),
        Stage("Output", [Activation("sigmoid")], (1,)),
    ]
    return Network(role=ROLE_CROP_MAPPER, stages=stages)


def build_network(role: str, seed: int = 0) -> Network:
    """Build the architecture that belongs to ``role``."""
    if role in (ROLE_GENERATOR_G, ROLE_GENERATOR_F):
        return build_generator(seed, role)
    if role in (ROLE_DISCRIMINATOR_X, ROLE_DISCRIMINATOR_Y):
        return build_discriminator(seed, role)
    if role == ROLE_CROP_MAPPER:
        return build_crop_mapper(seed)
    raise UsageError(f"Unknown network role: {role}", details={"known_roles": list(ROLES)})
