"""Numpy fallback kernels for the convolution and pooling hot loops.

These mirror the compiled Cython kernels in ``_kernels_cy``; the active
implementation is chosen once at import time in ``_backend``.  Accumulation
happens in float64 and results are rounded to float32 at the end, matching
the compiled path to within float32 rounding.
"""

import numpy as np
from numpy.lib.stride_tricks import as_strided


def conv2d(inp, weights, bias, sh, sw, ph, pw):
    """Cross-correlate ``inp`` (C,H,W) with ``weights`` (Co,Ci,kh,kw).

    Zero padding, stride (sh, sw).  Returns float32 (Co,Ho,Wo).
    """
    c_in, h, w = inp.shape
    c_out, _, kh, kw = weights.shape
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (w + 2 * pw - kw) // sw + 1

    padded = np.zeros((c_in, h + 2 * ph, w + 2 * pw), dtype=np.float64)
    padded[:, ph:ph + h, pw:pw + w] = inp

    cs, hs, ws = padded.strides
    cols = as_strided(
        padded,
        shape=(c_in, kh, kw, ho, wo),
        strides=(cs, hs, ws, hs * sh, ws * sw),
        writeable=False,
    ).reshape(c_in * kh * kw, ho * wo)

    flat_w = weights.reshape(c_out, c_in * kh * kw).astype(np.float64)
    out = flat_w @ cols + bias.astype(np.float64)[:, None]
    return out.reshape(c_out, ho, wo).astype(np.float32)


def maxpool2d(inp, kh, kw, sh, sw, ph, pw):
    """Max pooling with -inf padding semantics; returns float32 (C,Ho,Wo)."""
    c, h, w = inp.shape
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (w + 2 * pw - kw) // sw + 1

    padded = np.full((c, h + 2 * ph, w + 2 * pw), -np.inf, dtype=np.float32)
    padded[:, ph:ph + h, pw:pw + w] = inp

    cs, hs, ws = padded.strides
    windows = as_strided(
        padded,
        shape=(c, ho, wo, kh, kw),
        strides=(cs, hs * sh, ws * sw, hs, ws),
        writeable=False,
    )
    return windows.max(axis=(3, 4))
