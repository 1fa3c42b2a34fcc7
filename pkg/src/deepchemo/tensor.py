"""Dense rank-3 tensors and the layer primitives of the inference engine.

A ``Tensor`` is a (channels, height, width) array of float32 values stored
channel-major (C-order), so ``data.ravel()[c*H*W + y*W + x] == data[c, y, x]``.
All operations here are pure functions: they never mutate their inputs and
are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import BACKEND, conv2d_kernel, maxpool2d_kernel

__all__ = [
    "Tensor",
    "ConvParams",
    "BatchNormParams",
    "FeatureVector",
    "conv2d",
    "batchnorm_infer",
    "relu",
    "maxpool2d",
    "global_avg_pool",
    "add",
    "BACKEND",
]


def _as_f32(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.float32))


@dataclass(frozen=True)
class Tensor:
    """Rank-3 feature map of float32 values, dims (C, H, W)."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_f32(self.data)
        if arr.ndim != 3:
            raise ValueError(f"tensor must be rank 3, got rank {arr.ndim}")
        if min(arr.shape) < 1:
            raise ValueError(f"all dims must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    def ravel(self) -> np.ndarray:
        """Flatten channel-major, then row-major within a channel."""
        return self.data.ravel()


@dataclass(frozen=True)
class ConvParams:
    """Cross-correlation parameters: weights (C_out, C_in, kH, kW) + bias."""

    weights: np.ndarray
    bias: np.ndarray
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        w = _as_f32(self.weights)
        b = _as_f32(self.bias)
        if w.ndim != 4:
            raise ValueError(f"conv weights must be rank 4, got rank {w.ndim}")
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ValueError(
                f"bias length {b.shape} does not match output channels {w.shape[0]}"
            )
        if min(self.stride) < 1:
            raise ValueError(f"stride must be positive, got {self.stride}")
        if min(self.padding) < 0:
            raise ValueError(f"padding must be non-negative, got {self.padding}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class BatchNormParams:
    """Inference-mode batch normalization parameters (running statistics)."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    epsilon: float = 1e-5

    def __post_init__(self):
        vecs = {}
        for name in ("gamma", "beta", "running_mean", "running_var"):
            v = _as_f32(getattr(self, name))
            if v.ndim != 1:
                raise ValueError(f"{name} must be a vector")
            vecs[name] = v
        lengths = {v.shape[0] for v in vecs.values()}
        if len(lengths) != 1:
            raise ValueError(f"batchnorm vectors disagree in length: {lengths}")
        if np.any(vecs["running_var"] < 0):
            raise ValueError("running_var must be non-negative")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        for name, v in vecs.items():
            object.__setattr__(self, name, v)

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class FeatureVector:
    """Flat feature vector tapped from a named network layer."""

    values: np.ndarray
    tap_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", _as_f32(self.values).ravel())

    def __len__(self) -> int:
        return self.values.shape[0]


def _out_dim(size: int, k: int, s: int, p: int) -> int:
    padded = size + 2 * p
    if padded < k:
        raise ValueError(
            f"kernel size {k} larger than padded input size {padded}"
        )
    return (padded - k) // s + 1


def conv2d(input: Tensor, params: ConvParams) -> Tensor:
    """2-D cross-correlation with zero padding.

    out[c, y, x] = bias[c] + sum over the (C_in, kH, kW) window of
    weights[c] * input, with stride/padding from ``params``.  Accumulation
    is float64 per output element.
    """
    if input.channels != params.in_channels:
        raise ValueError(
            f"input has {input.channels} channels, kernel expects {params.in_channels}"
        )
    _, h, w = input.dims
    kh, kw = params.weights.shape[2:]
    sh, sw = params.stride
    ph, pw = params.padding
    _out_dim(h, kh, sh, ph)
    _out_dim(w, kw, sw, pw)
    out = conv2d_kernel(input.data, params.weights, params.bias, sh, sw, ph, pw)
    return Tensor(out)


def batchnorm_infer(input: Tensor, params: BatchNormParams) -> Tensor:
    """Per-channel affine normalization with running statistics."""
    if input.channels != params.channels:
        raise ValueError(
            f"input has {input.channels} channels, batchnorm expects {params.channels}"
        )
    x = input.data.astype(np.float64)
    mean = params.running_mean.astype(np.float64)[:, None, None]
    var = params.running_var.astype(np.float64)[:, None, None]
    gamma = params.gamma.astype(np.float64)[:, None, None]
    beta = params.beta.astype(np.float64)[:, None, None]
    out = gamma * (x - mean) / np.sqrt(var + params.epsilon) + beta
    return Tensor(out.astype(np.float32))


def relu(input: Tensor) -> Tensor:
    """Elementwise max(0, x)."""
    return Tensor(np.maximum(input.data, np.float32(0.0)))


def maxpool2d(input: Tensor, kernel: tuple[int, int], stride: tuple[int, int],
              padding: tuple[int, int] = (0, 0)) -> Tensor:
    """Max pooling; padded positions act as -inf and never win the max."""
    _, h, w = input.dims
    kh, kw = kernel
    sh, sw = stride
    ph, pw = padding
    _out_dim(h, kh, sh, ph)
    _out_dim(w, kw, sw, pw)
    out = maxpool2d_kernel(input.data, kh, kw, sh, sw, ph, pw)
    return Tensor(out)


def global_avg_pool(input: Tensor, tap_name: str = "gap") -> FeatureVector:
    """Per-channel spatial mean: (C, H, W) -> length-C vector."""
    means = input.data.astype(np.float64).mean(axis=(1, 2))
    return FeatureVector(means.astype(np.float32), tap_name)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two tensors of identical dims."""
    if a.dims != b.dims:
        raise ValueError(f"dim mismatch in add: {a.dims} vs {b.dims}")
    return Tensor(a.data + b.data)
