"""Archive export and golden-fixture generation."""

import hashlib
import os

import numpy as np

from . import format as fmt
from . import prep, refmodel


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_archive_entries(model) -> dict:
    """Ordered archive entries: mapped model tensors plus normalization
    metadata."""
    name_map = refmodel.archive_name_map(model)
    state = model.state_dict()
    entries = {}
    for src, dst in name_map.items():
        if dst in entries:
            raise ValueError(f"archive name {dst!r} mapped twice")
        entries[dst] = state[src].numpy().astype(np.float32)
    entries["meta.mean"] = prep.IMAGENET_MEAN.astype(np.float32)
    entries["meta.std"] = prep.IMAGENET_STD.astype(np.float32)
    return entries


def make_fixture_images() -> dict:
    """Deterministic fixture rasters: a 4x4 checkerboard and the textured
    image F1 (260x200, non-square so the resize path is exercised)."""
    yy, xx = np.mgrid[0:4, 0:4]
    checker = np.where(((xx + yy) % 2 == 0)[..., None], 255, 0).astype(np.uint8)
    checker = np.repeat(checker, 3, axis=2)

    rng = np.random.default_rng(7)
    h, w = 200, 260
    gy, gx = np.mgrid[0:h, 0:w]
    base = 90 + 60 * gx / w + 30 * np.sin(gy / 11.0)
    noise = rng.normal(0, 35, size=(h, w))
    gray = np.clip(base + noise, 0, 255)
    f1 = np.stack([gray, np.clip(gray * 0.9 + 10, 0, 255),
                   np.clip(gray * 0.8 + 5, 0, 255)], axis=2).astype(np.uint8)
    return {"checkerboard": checker, "f1": f1}


def run_export(out_dir: str) -> dict:
    """Export the archive and every fixture; returns the manifest pairs."""
    os.makedirs(out_dir, exist_ok=True)
    model = refmodel.build_reference_model()

    entries = build_archive_entries(model)
    archive_bytes = fmt.write_archive(entries)
    with open(os.path.join(out_dir, "resnet18.nnw"), "wb") as fh:
        fh.write(archive_bytes)

    manifest = {
        "source_id": refmodel.SOURCE_ID,
        "seed": refmodel.SEED,
        "parameter_groups": refmodel.parameter_group_count(model),
        "archive_tensors": len(entries),
        "archive_sha256": _sha256(archive_bytes),
    }

    images = make_fixture_images()
    for name, pixels in images.items():
        data = prep.encode_ppm(pixels)
        with open(os.path.join(out_dir, f"{name}.ppm"), "wb") as fh:
            fh.write(data)
        manifest[f"{name}.ppm_sha256"] = _sha256(data)

    # F1: prepared tensor + gap activations; zero input: gap activations
    prepared = prep.normalize(prep.resize_bilinear(images["f1"], 224, 224))
    vec_files = {"f1.norm.vec": prepared.ravel()}
    acts = refmodel.tap_activations(model, prepared, ["gap", "stage4"])
    vec_files["f1.gap.vec"] = acts["gap"]
    vec_files["f1.stage4.vec"] = acts["stage4"]
    zero = np.zeros((3, 224, 224), dtype=np.float32)
    vec_files["zero.gap.vec"] = refmodel.tap_activations(model, zero, ["gap"])["gap"]

    for name, values in vec_files.items():
        data = fmt.write_vec(values)
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
        manifest[f"{name}_sha256"] = _sha256(data)

    lines = "".join(f"{k}={v}\n" for k, v in manifest.items())
    with open(os.path.join(out_dir, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write(lines)
    return manifest
