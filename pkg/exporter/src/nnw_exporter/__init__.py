"""NNW1 weight-archive exporter and golden-fixture generator."""

__version__ = "0.1.0"
