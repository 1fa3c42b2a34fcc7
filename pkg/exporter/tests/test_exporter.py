import hashlib
import os

import numpy as np
import pytest

from nnw_exporter import export, format as fmt, prep, refmodel

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "..", "tests",
                        "fixtures")


def sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


@pytest.fixture(scope="session")
def model():
    return refmodel.build_reference_model()


@pytest.fixture(scope="session")
def regenerated(tmp_path_factory, model):
    out = tmp_path_factory.mktemp("export")
    manifest = export.run_export(str(out))
    return out, manifest


def test_archive_round_trip_byte_equality(model):
    entries = export.build_archive_entries(model)
    data = fmt.write_archive(entries)
    again = fmt.read_archive(data)
    assert list(again) == list(entries)
    for name in entries:
        assert np.array_equal(again[name], entries[name]), name
    assert fmt.write_archive(again) == data


def test_vec_round_trip():
    values = np.random.default_rng(0).normal(size=257).astype(np.float32)
    assert np.array_equal(fmt.read_vec(fmt.write_vec(values)), values)


def test_parameter_group_count(model):
    assert refmodel.parameter_group_count(model) == 62


def test_tampered_archive_detected(model):
    entries = export.build_archive_entries(model)
    data = bytearray(fmt.write_archive(entries))
    digest = hashlib.sha256(bytes(data)).hexdigest()
    data[len(data) // 2] ^= 0x01
    assert hashlib.sha256(bytes(data)).hexdigest() != digest


def test_resize_closed_form_oracle():
    # 2x1 black/white to 4x1: source coords {-0.25, 0.25, 0.75, 1.25}
    # edge-clamped -> {0, 64, 191, 255} after half-up rounding
    img = np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8)
    out = prep.resize_bilinear(img, 4, 1)
    assert list(out[0, :, 0]) == [0, 64, 191, 255]


def test_resize_matches_inference_engine():
    # the exporter re-implements the engine's documented resize; the two
    # must agree byte for byte on a shared test image
    deepchemo_prep = pytest.importorskip("deepchemo.imageprep")
    px = np.random.default_rng(1).integers(0, 256, size=(37, 53, 3),
                                           dtype=np.uint8)
    a = prep.resize_bilinear(px, 224, 224)
    b = deepchemo_prep.resize_bilinear(deepchemo_prep.RasterImage(px),
                                       224, 224).pixels
    assert np.array_equal(a, b)


def test_regeneration_matches_committed_fixtures(regenerated):
    out, manifest = regenerated
    names = ["resnet18.nnw", "checkerboard.ppm", "f1.ppm", "f1.norm.vec",
             "f1.gap.vec", "f1.stage4.vec", "zero.gap.vec", "manifest.txt"]
    for name in names:
        committed = os.path.join(FIXTURES, name)
        fresh = os.path.join(str(out), name)
        assert sha256(fresh) == sha256(committed), name


def test_manifest_counts(regenerated):
    _, manifest = regenerated
    assert manifest["parameter_groups"] == 62
    assert manifest["archive_tensors"] == 102


def test_repeat_export_byte_identical(tmp_path, regenerated):
    out1, _ = regenerated
    export.run_export(str(tmp_path))
    for name in ("resnet18.nnw", "f1.gap.vec", "manifest.txt"):
        assert sha256(os.path.join(str(tmp_path), name)) == sha256(
            os.path.join(str(out1), name)), name
