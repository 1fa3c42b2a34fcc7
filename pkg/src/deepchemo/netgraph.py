"""ResNet-18 graph assembly and forward execution with feature taps.

The topology is fixed: a stem (7x7/2 conv, BN, ReLU, 3x3/2 max pool)
followed by four stages of two basic residual blocks (stage widths
64/128/256/512), with 1x1 stride-2 projection shortcuts at stage
transitions, terminating in global average pooling.  Taps:

    =========  =============================  ========
    tap        read after                     length
    =========  =============================  ========
    stem       stem max pool                  64*56*56
    stage1..4  last block of the stage        see DIMS
    gap        global average pool            512
    =========  =============================  ========

Pre-GAP taps return the feature map flattened channel-major.  The MATLAB
layer names 'pool5' and 'pool4' correspond to "gap" and "stage4" here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import ArchiveError, WeightArchive
from .tensor import (
    BatchNormParams,
    ConvParams,
    FeatureVector,
    Tensor,
    add,
    batchnorm_infer,
    conv2d,
    global_avg_pool,
    maxpool2d,
    relu,
)

INPUT_DIMS = (3, 224, 224)

TAP_NAMES = ("stem", "stage1", "stage2", "stage3", "stage4", "gap")

#: flattened output length per tap
TAP_DIMS = {
    "stem": (64, 56, 56),
    "stage1": (64, 56, 56),
    "stage2": (128, 28, 28),
    "stage3": (256, 14, 14),
    "stage4": (512, 7, 7),
    "gap": (512,),
}

_STAGE_WIDTHS = (64, 128, 256, 512)


class GraphError(ValueError):
    """Archive does not describe a valid ResNet-18."""


@dataclass(frozen=True)
class BlockParams:
    """One basic residual block; ``projection`` is the optional shortcut."""

    conv1: ConvParams
    bn1: BatchNormParams
    conv2: ConvParams
    bn2: BatchNormParams
    projection: tuple[ConvParams, BatchNormParams] | None = None


@dataclass(frozen=True)
class NetworkGraph:
    """Immutable, fully wired ResNet-18 ready for forward passes."""

    stem_conv: ConvParams
    stem_bn: BatchNormParams
    blocks: tuple  # 8 BlockParams, two per stage
    mean: np.ndarray
    std: np.ndarray


def required_names() -> list[str]:
    """Every archive tensor name the ResNet-18 manifest demands."""
    names = ["conv1.weight"]
    names += [f"bn1.{s}" for s in ("gamma", "beta", "mean", "var")]
    for stage in range(1, 5):
        for block in range(2):
            pre = f"layer{stage}.{block}"
            for conv in (1, 2):
                names.append(f"{pre}.conv{conv}.weight")
                names += [f"{pre}.bn{conv}.{s}" for s in ("gamma", "beta", "mean", "var")]
            if stage > 1 and block == 0:
                names.append(f"{pre}.downsample.conv.weight")
                names += [f"{pre}.downsample.bn.{s}" for s in ("gamma", "beta", "mean", "var")]
    names += ["meta.mean", "meta.std"]
    return names


def parameter_group_names() -> list[str]:
    """The 62 weighted parameter groups: 20 conv kernels, 20 BN scales,
    20 BN shifts, plus the two normalization metadata entries."""
    return [
        n for n in required_names()
        if n.endswith((".weight", ".gamma", ".beta")) or n.startswith("meta.")
    ]


def _get(archive: WeightArchive, name: str, shape: tuple) -> np.ndarray:
    if name not in archive:
        raise GraphError(f"missing tensor {name!r}")
    arr = archive[name]
    if arr.shape != shape:
        raise GraphError(
            f"tensor {name!r} has dims {arr.shape}, layer expects {shape}"
        )
    return arr


def _conv(archive, name, c_out, c_in, k, stride, pad) -> ConvParams:
    w = _get(archive, name, (c_out, c_in, k, k))
    return ConvParams(w, np.zeros(c_out, dtype=np.float32),
                      stride=(stride, stride), padding=(pad, pad))


def _bn(archive, prefix, c) -> BatchNormParams:
    return BatchNormParams(
        gamma=_get(archive, f"{prefix}.gamma", (c,)),
        beta=_get(archive, f"{prefix}.beta", (c,)),
        running_mean=_get(archive, f"{prefix}.mean", (c,)),
        running_var=_get(archive, f"{prefix}.var", (c,)),
    )


def build_resnet18(archive: WeightArchive) -> NetworkGraph:
    """Assemble the fixed ResNet-18 topology from a validated archive."""
    stem_conv = _conv(archive, "conv1.weight", 64, 3, 7, stride=2, pad=3)
    stem_bn = _bn(archive, "bn1", 64)

    blocks = []
    c_in = 64
    for stage, width in enumerate(_STAGE_WIDTHS, start=1):
        for block in range(2):
            pre = f"layer{stage}.{block}"
            first_stride = 2 if (stage > 1 and block == 0) else 1
            conv1 = _conv(archive, f"{pre}.conv1.weight", width, c_in, 3,
                          stride=first_stride, pad=1)
            conv2 = _conv(archive, f"{pre}.conv2.weight", width, width, 3,
                          stride=1, pad=1)
            projection = None
            if stage > 1 and block == 0:
                proj_conv = _conv(archive, f"{pre}.downsample.conv.weight",
                                  width, c_in, 1, stride=2, pad=0)
                projection = (proj_conv, _bn(archive, f"{pre}.downsample.bn", width))
            blocks.append(BlockParams(
                conv1=conv1,
                bn1=_bn(archive, f"{pre}.bn1", width),
                conv2=conv2,
                bn2=_bn(archive, f"{pre}.bn2", width),
                projection=projection,
            ))
            c_in = width

    return NetworkGraph(stem_conv, stem_bn, tuple(blocks),
                        archive.mean.copy(), archive.std.copy())


def residual_block(input: Tensor, block: BlockParams,
                   _disable_skip: bool = False) -> Tensor:
    """ReLU(BN2(conv2(ReLU(BN1(conv1(x))))) + shortcut(x)).

    ``_disable_skip`` drops the shortcut term; it exists only so tests can
    prove the skip connection contributes to the output.
    """
    out = relu(batchnorm_infer(conv2d(input, block.conv1), block.bn1))
    out = batchnorm_infer(conv2d(out, block.conv2), block.bn2)
    if _disable_skip:
        return relu(out)
    if block.projection is not None:
        proj_conv, proj_bn = block.projection
        shortcut = batchnorm_infer(conv2d(input, proj_conv), proj_bn)
    else:
        shortcut = input
    return relu(add(out, shortcut))


def forward(graph: NetworkGraph, input: Tensor, tap: str = "gap",
            _disable_skip: bool = False) -> FeatureVector:
    """Run the network up to ``tap`` and return the tapped features.

    Pre-GAP taps flatten the feature map channel-major.
    """
    if tap not in TAP_NAMES:
        raise ValueError(f"unknown tap {tap!r}, expected one of {TAP_NAMES}")
    if input.dims != INPUT_DIMS:
        raise ValueError(f"input dims {input.dims}, network expects {INPUT_DIMS}")

    x = relu(batchnorm_infer(conv2d(input, graph.stem_conv), graph.stem_bn))
    x = maxpool2d(x, kernel=(3, 3), stride=(2, 2), padding=(1, 1))
    if tap == "stem":
        return FeatureVector(x.ravel(), "stem")

    for i, block in enumerate(graph.blocks):
        x = residual_block(x, block, _disable_skip=_disable_skip)
        if i % 2 == 1 and tap == f"stage{i // 2 + 1}":
            return FeatureVector(x.ravel(), tap)

    return global_avg_pool(x, "gap")
