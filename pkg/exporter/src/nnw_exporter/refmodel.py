"""Reference ResNet-18 construction and archive name mapping.

Published pretrained checkpoints are not reachable from this environment,
so the reference model is built deterministically: seeded default
initialization followed by BatchNorm running-statistics calibration on
seeded synthetic batches (cumulative averaging).  The source identifier
and seed are pinned in the export manifest so fixtures stay
self-consistent.
"""

import numpy as np
import torch
import torchvision

SOURCE_ID = "torchvision/resnet18:seeded-init-v1"
SEED = 20250824
CALIB_BATCHES = 8
CALIB_BATCH_SIZE = 8


def build_reference_model() -> torch.nn.Module:
    torch.manual_seed(SEED)
    model = torchvision.models.resnet18(weights=None)

    # Calibrate BN running stats on synthetic inputs so inference-mode
    # activations stay well scaled at every depth.
    for m in model.modules():
        if isinstance(m, torch.nn.BatchNorm2d):
            m.momentum = None  # cumulative moving average
    model.train()
    gen = torch.Generator().manual_seed(SEED + 1)
    with torch.no_grad():
        for _ in range(CALIB_BATCHES):
            batch = torch.randn(CALIB_BATCH_SIZE, 3, 224, 224, generator=gen)
            model(batch)
    model.eval()
    return model


def parameter_group_count(model: torch.nn.Module) -> int:
    return len(list(model.named_parameters()))


def archive_name_map(model: torch.nn.Module) -> dict:
    """source state-dict name -> archive name, classifier head excluded."""
    bn_suffix = {"weight": "gamma", "bias": "beta",
                 "running_mean": "mean", "running_var": "var"}
    mapping = {}
    for name in model.state_dict():
        if name.startswith("fc.") or name.endswith("num_batches_tracked"):
            continue
        head, _, leaf = name.rpartition(".")
        if head == "conv1" or head.endswith((".conv1", ".conv2")):
            mapping[name] = f"{head}.weight"
        elif head.endswith(".downsample.0"):
            mapping[name] = head[:-2] + ".conv.weight"
        elif head.endswith(".downsample.1"):
            mapping[name] = head[:-2] + f".bn.{bn_suffix[leaf]}"
        else:  # bn1, layerX.Y.bnZ
            mapping[name] = f"{head}.{bn_suffix[leaf]}"
    return mapping


def tap_activations(model: torch.nn.Module, tensor: np.ndarray, taps) -> dict:
    """Run the reference forward pass and read the requested taps.

    ``tensor`` is the prepared (3, 224, 224) float32 input.  Pre-GAP taps
    are flattened channel-major.
    """
    tap_modules = {
        "stem": model.maxpool,
        "stage1": model.layer1,
        "stage2": model.layer2,
        "stage3": model.layer3,
        "stage4": model.layer4,
        "gap": model.avgpool,
    }
    captured = {}
    hooks = []
    for tap in taps:
        def make_hook(tap=tap):
            def hook(_mod, _inp, out):
                captured[tap] = out.detach().numpy()[0].ravel().astype(np.float32)
            return hook
        hooks.append(tap_modules[tap].register_forward_hook(make_hook()))
    try:
        with torch.no_grad():
            model(torch.from_numpy(tensor[None].astype(np.float32)))
    finally:
        for h in hooks:
            h.remove()
    return captured
