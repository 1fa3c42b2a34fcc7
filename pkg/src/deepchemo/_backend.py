"""Kernel backend selection.

Two implementations of the convolution/pooling hot kernels exist: a
compiled Cython core (fixed per-element accumulation order, no BLAS
dependency) and a numpy im2col path that leans on the linked BLAS.  On
hosts with an optimized BLAS the numpy path is substantially faster at
ResNet-scale shapes (see scripts/benchmark.py), so it is the default.

Set ``DEEPCHEMO_BACKEND=compiled`` or ``DEEPCHEMO_BACKEND=numpy`` to force
a backend; forcing the compiled one raises if the extension did not build.
"""

import os

from . import _kernels_np

_forced = os.environ.get("DEEPCHEMO_BACKEND", "").lower()

if _forced == "compiled":
    from . import _kernels_cy as _impl
    BACKEND = "compiled"
elif _forced in ("", "numpy"):
    _impl = _kernels_np
    BACKEND = "numpy"
else:
    raise ValueError(f"unknown DEEPCHEMO_BACKEND value {_forced!r}")


def compiled_available() -> bool:
    try:
        from . import _kernels_cy  # noqa: F401
        return True
    except ImportError:
        return False


conv2d_kernel = _impl.conv2d
maxpool2d_kernel = _impl.maxpool2d
