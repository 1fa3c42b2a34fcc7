import os

import numpy as np
import pytest

from deepchemo.archive import load_archive_file
from deepchemo.netgraph import build_resnet18

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="session")
def resnet_archive():
    return load_archive_file(fixture_path("resnet18.nnw"))


@pytest.fixture(scope="session")
def resnet_graph(resnet_archive):
    return build_resnet18(resnet_archive)


@pytest.fixture(autouse=True)
def _no_svg_timestamp(monkeypatch):
    monkeypatch.setenv("DEEPCHEM_NO_TIMESTAMP", "1")


def rng(seed):
    return np.random.default_rng(seed)
