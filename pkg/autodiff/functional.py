"""Layer primitives: convolution, normalization, activations and dense maps.

Spatial tensors are channels-last. Every primitive works on a leading batch
axis (N, H, W, C); an unbatched (H, W, C) input is treated as a batch of one
and the result is returned unbatched.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from autodiff.tensor import Tensor, as_tensor, emit
from shared.errors import ConfigurationError, DimensionError

LEAKY_SLOPE = 0.2
NORM_EPSILON = 1e-5
LOG_CLAMP = 1e-7

ACTIVATIONS = ("relu", "leaky_relu", "sigmoid")


def _pair(value) -> tuple[int, int]:
    if isinstance(value, int):
        return value, value
    first, second = value
    return int(first), int(second)


def _windows(xp: np.ndarray, kh: int, kw: int, stride, out_h: int, out_w: int) -> np.ndarray:
    """Strided (N, out_h, out_w, C, kh, kw) view of the kernel-sized patches of xp."""
    sh, sw = stride
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    return win[:, : (out_h - 1) * sh + 1 : sh, : (out_w - 1) * sw + 1 : sw]


def _scatter(g: np.ndarray, kernels: np.ndarray, full_shape, stride) -> np.ndarray:
    """Adjoint of the patch extraction: spread each output cell back over its patch."""
    sh, sw = stride
    kh, kw = kernels.shape[:2]
    out_h, out_w = g.shape[1:3]
    out = np.zeros(full_shape)
    for i in range(kh):
        for j in range(kw):
            out[:, i : i + sh * (out_h - 1) + 1 : sh, j : j + sw * (out_w - 1) + 1 : sw, :] += (
                np.tensordot(g, kernels[i, j], axes=([3], [1]))
            )
    return out


def _batched(x: Tensor) -> bool:
    return x.ndim == 4


def _check_conv(op: str, x: Tensor, kernels: Tensor, bias: Tensor, channels: int, out_ch: int):
    if kernels.ndim != 4:
        raise DimensionError(op, "kernels of rank 4 (kh, kw, c_x, c_y)", kernels.shape)
    if x.ndim != 4:
        raise DimensionError(op, "input of rank 3 or 4", x.shape)
    if x.shape[3] != channels:
        raise DimensionError(f"{op} input channels", channels, x.shape[3])
    if bias.shape != (out_ch,):
        raise DimensionError(f"{op} bias", (out_ch,), bias.shape)


def conv2d(x, kernels, bias, stride=(1, 1), padding=(0, 0)) -> Tensor:
    """
    Cross-correlate a (N, H, W, Cin) input with (kh, kw, Cin, Cout) kernels.

    Output size per axis is floor((H + 2*pad - k) / stride) + 1.

    Raises:
        DimensionError: Kernel input channels do not match the input
        ConfigurationError: The geometry yields an empty output
    """
    x, kernels, bias = as_tensor(x), as_tensor(kernels), as_tensor(bias)
    if x.ndim == 3:
        out = conv2d(x.reshape((1, *x.shape)), kernels, bias, stride, padding)
        return out.reshape(out.shape[1:])

    stride, padding = _pair(stride), _pair(padding)
    kh, kw, cin, cout = kernels.shape if kernels.ndim == 4 else (0, 0, 0, 0)
    _check_conv("conv2d", x, kernels, bias, cin, cout)
    n, h, w, _ = x.shape
    (sh, sw), (ph, pw) = stride, padding
    if h + 2 * ph < kh or w + 2 * pw < kw or sh < 1 or sw < 1:
        raise ConfigurationError(
            "conv2d geometry", f"kernel {(kh, kw)} does not fit input {(h, w)} with pad {padding}"
        )
    out_h = (h + 2 * ph - kh) // sh + 1
    out_w = (w + 2 * pw - kw) // sw + 1

    xp = np.pad(x.data, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    win = _windows(xp, kh, kw, stride, out_h, out_w)
    out = np.tensordot(win, kernels.data, axes=([3, 4, 5], [2, 0, 1])) + bias.data

    def vjp(g):
        gx = _scatter(g, kernels.data, xp.shape, stride)[:, ph : ph + h, pw : pw + w, :]
        gk = np.tensordot(win, g, axes=([0, 1, 2], [0, 1, 2])).transpose(1, 2, 0, 3)
        return gx, gk, g.sum(axis=(0, 1, 2))

    return emit("conv2d", out, (x, kernels, bias), vjp)


def transposed_conv2d(x, kernels, bias, stride=(1, 1), padding=(0, 0)) -> Tensor:
    """
    Adjoint of conv2d: spreads a (N, H, W, Cy) input through (kh, kw, Cx, Cy) kernels.

    The kernel layout is that of the conv2d this op is the transpose of, so the
    output has Cx channels and size (H - 1) * stride + k - 2 * pad per axis.
    """
    x, kernels, bias = as_tensor(x), as_tensor(kernels), as_tensor(bias)
    if x.ndim == 3:
        out = transposed_conv2d(x.reshape((1, *x.shape)), kernels, bias, stride, padding)
        return out.reshape(out.shape[1:])

    stride, padding = _pair(stride), _pair(padding)
    kh, kw, cx, cy = kernels.shape if kernels.ndim == 4 else (0, 0, 0, 0)
    _check_conv("transposed_conv2d", x, kernels, bias, cy, cx)
    n, h, w, _ = x.shape
    (sh, sw), (ph, pw) = stride, padding
    full_h = (h - 1) * sh + kh
    full_w = (w - 1) * sw + kw
    out_h, out_w = full_h - 2 * ph, full_w - 2 * pw
    if out_h < 1 or out_w < 1 or sh < 1 or sw < 1:
        raise ConfigurationError(
            "transposed_conv2d geometry", f"output size {(out_h, out_w)} is not positive"
        )

    full = _scatter(x.data, kernels.data, (n, full_h, full_w, cx), stride)
    out = full[:, ph : ph + out_h, pw : pw + out_w, :] + bias.data

    def vjp(g):
        gp = np.pad(g, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
        win = _windows(gp, kh, kw, stride, h, w)
        gx = np.tensordot(win, kernels.data, axes=([3, 4, 5], [2, 0, 1]))
        gk = np.tensordot(win, x.data, axes=([0, 1, 2], [0, 1, 2])).transpose(1, 2, 0, 3)
        return gx, gk, g.sum(axis=(0, 1, 2))

    return emit("transposed_conv2d", out, (x, kernels, bias), vjp)


def relu(x) -> Tensor:
    x = as_tensor(x)
    active = x.data > 0
    return emit("relu", np.where(active, x.data, 0.0), (x,), lambda g: (g * active,))


def leaky_relu(x, slope: float = LEAKY_SLOPE) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ConfigurationError("slope", f"leaky_relu slope must be in (0, 1), got {slope}")
    x = as_tensor(x)
    scale = np.where(x.data > 0, 1.0, slope)
    return emit("leaky_relu", x.data * scale, (x,), lambda g: (g * scale,))


def sigmoid(x) -> Tensor:
    """Logistic function, evaluated without overflow for large |x|."""
    x = as_tensor(x)
    z = np.exp(-np.abs(x.data))
    s = np.where(x.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return emit("sigmoid", s, (x,), lambda g: (g * s * (1.0 - s),))


def activation(kind: str, x, slope: float = LEAKY_SLOPE) -> Tensor:
    """Apply one of the supported elementwise activations by name."""
    if kind == "relu":
        return relu(x)
    if kind == "leaky_relu":
        return leaky_relu(x, slope)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ConfigurationError("activation", f"unknown kind {kind!r}, expected one of {ACTIVATIONS}")


def _normalize(x: np.ndarray, axes: tuple[int, ...], eps: float):
    mean = x.mean(axis=axes, keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    return centered * inv, inv, mean, var


def _norm_input_grad(dxhat: np.ndarray, xhat: np.ndarray, inv: np.ndarray, axes, count: int):
    return (inv / count) * (
        count * dxhat
        - dxhat.sum(axis=axes, keepdims=True)
        - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
    )


def instance_norm(x, gain, shift, epsilon: float = NORM_EPSILON) -> Tensor:
    """Normalize every channel of every instance over its spatial cells, then scale and shift."""
    x, gain, shift = as_tensor(x), as_tensor(gain), as_tensor(shift)
    if x.ndim == 3:
        out = instance_norm(x.reshape((1, *x.shape)), gain, shift, epsilon)
        return out.reshape(out.shape[1:])
    if x.ndim != 4:
        raise DimensionError("instance_norm", "input of rank 3 or 4", x.shape)
    channels = x.shape[3]
    if gain.shape != (channels,) or shift.shape != (channels,):
        raise DimensionError("instance_norm gain/shift", (channels,), (gain.shape, shift.shape))

    axes = (1, 2)
    count = x.shape[1] * x.shape[2]
    xhat, inv, _, _ = _normalize(x.data, axes, epsilon)
    out = xhat * gain.data + shift.data

    def vjp(g):
        gx = _norm_input_grad(g * gain.data, xhat, inv, axes, count)
        return gx, (g * xhat).sum(axis=(0, 1, 2)), g.sum(axis=(0, 1, 2))

    return emit("instance_norm", out, (x, gain, shift), vjp)


@dataclass
class RunningStats:
    """Exponential moving averages of batch mean and variance for one batch-norm layer."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.1

    @classmethod
    def fresh(cls, channels: int, momentum: float = 0.1) -> "RunningStats":
        return cls(mean=np.zeros(channels), var=np.ones(channels), momentum=momentum)

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray) -> None:
        self.mean = (1.0 - self.momentum) * self.mean + self.momentum * batch_mean
        self.var = (1.0 - self.momentum) * self.var + self.momentum * batch_var


def batch_norm(
    x,
    gain,
    shift,
    running: RunningStats,
    mode: str = "train",
    epsilon: float = NORM_EPSILON,
) -> Tensor:
    """
    Normalize each channel over the batch (and spatial cells, if any).

    In train mode batch statistics are used and folded into ``running``; the
    running variance uses the unbiased batch estimate. In eval mode only the
    running statistics are used and nothing is updated.

    Raises:
        ConfigurationError: Train mode with a batch of one, or an unknown mode
    """
    x, gain, shift = as_tensor(x), as_tensor(gain), as_tensor(shift)
    channels = x.shape[-1]
    if gain.shape != (channels,) or shift.shape != (channels,):
        raise DimensionError("batch_norm gain/shift", (channels,), (gain.shape, shift.shape))
    axes = tuple(range(x.ndim - 1))

    if mode == "train":
        if x.shape[0] < 2:
            raise ConfigurationError("batch_size", "batch_norm in train mode needs at least 2 samples")
        count = int(np.prod([x.shape[a] for a in axes]))
        xhat, inv, mean, var = _normalize(x.data, axes, epsilon)
        running.update(mean.reshape(-1), var.reshape(-1) * count / max(count - 1, 1))

        def vjp(g):
            gx = _norm_input_grad(g * gain.data, xhat, inv, axes, count)
            return gx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    elif mode == "eval":
        inv = 1.0 / np.sqrt(running.var + epsilon)
        xhat = (x.data - running.mean) * inv

        def vjp(g):
            return g * gain.data * inv, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    else:
        raise ConfigurationError("mode", f"batch_norm mode must be 'train' or 'eval', got {mode!r}")

    out = xhat * gain.data + shift.data
    return emit("batch_norm", out, (x, gain, shift), vjp)


def dense(x, weights, bias) -> Tensor:
    """Affine map x @ W + b for (N, n) or unbatched (n,) inputs."""
    x, weights, bias = as_tensor(x), as_tensor(weights), as_tensor(bias)
    if x.ndim == 1:
        return dense(x.reshape((1, x.shape[0])), weights, bias).reshape((weights.shape[1],))
    if weights.ndim != 2 or x.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise DimensionError("dense", f"input (N, {weights.shape[0]})", x.shape)
    if bias.shape != (weights.shape[1],):
        raise DimensionError("dense bias", (weights.shape[1],), bias.shape)

    out = x.data @ weights.data + bias.data

    def vjp(g):
        return g @ weights.data.T, x.data.T @ g, g.sum(axis=0)

    return emit("dense", out, (x, weights, bias), vjp)


def flatten(x) -> Tensor:
    """Collapse all but the batch axis."""
    x = as_tensor(x)
    return x.reshape((x.shape[0], -1))


def l1_distance(a, b) -> Tensor:
    """Mean absolute difference, normalized by element count."""
    return (as_tensor(a) - as_tensor(b)).abs().mean()


def clamped_log(p, clamp: float = LOG_CLAMP) -> Tensor:
    """log(p) with p clamped into [clamp, 1 - clamp]."""
    return as_tensor(p).clip(clamp, 1.0 - clamp).log()


def binary_cross_entropy(prob, target, clamp: float = LOG_CLAMP) -> Tensor:
    """Mean binary cross-entropy of probabilities against {0, 1} targets."""
    prob, target = as_tensor(prob), as_tensor(target)
    pos = target * clamped_log(prob, clamp)
    neg = (1.0 - target) * clamped_log(1.0 - prob, clamp)
    return -(pos + neg).mean()
