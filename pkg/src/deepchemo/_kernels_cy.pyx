# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the convolution and pooling hot loops.

Each output element is accumulated in float64 in a fixed (c_in, ky, kx)
order, so results are bitwise independent of the number of threads.
"""

import numpy as np

cimport cython
from cython.parallel cimport prange


def conv2d(float[:, :, ::1] inp, float[:, :, :, ::1] weights,
           float[::1] bias, int sh, int sw, int ph, int pw):
    cdef int c_in = inp.shape[0]
    cdef int h = inp.shape[1]
    cdef int w = inp.shape[2]
    cdef int c_out = weights.shape[0]
    cdef int kh = weights.shape[2]
    cdef int kw = weights.shape[3]
    cdef int ho = (h + 2 * ph - kh) // sh + 1
    cdef int wo = (w + 2 * pw - kw) // sw + 1

    out_arr = np.empty((c_out, ho, wo), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    # per-output-channel float64 accumulator planes; each output element
    # still accumulates in fixed (c_in, ky, kx) order
    acc_arr = np.empty((c_out, ho * wo), dtype=np.float64)
    cdef double[:, ::1] acc = acc_arr
    inp64_arr = np.asarray(inp, dtype=np.float64)
    cdef double[:, :, ::1] inp64 = inp64_arr

    cdef int co, ci, oy, ox, ky, kx, iy, i, oy0, oy1, ox0, ox1, off
    cdef double wv
    cdef double* arow
    cdef const double* irow

    for co in prange(c_out, nogil=True, schedule='static'):
        for i in range(ho * wo):
            acc[co, i] = bias[co]
        for ci in range(c_in):
            for ky in range(kh):
                oy0 = 0 if ph <= ky else (ph - ky + sh - 1) // sh
                oy1 = (h - 1 - ky + ph) // sh + 1
                if oy1 > ho:
                    oy1 = ho
                for kx in range(kw):
                    wv = weights[co, ci, ky, kx]
                    ox0 = 0 if pw <= kx else (pw - kx + sw - 1) // sw
                    ox1 = (w - 1 - kx + pw) // sw + 1
                    if ox1 > wo:
                        ox1 = wo
                    off = kx - pw
                    for oy in range(oy0, oy1):
                        iy = oy * sh + ky - ph
                        arow = &acc[co, oy * wo]
                        irow = &inp64[ci, iy, 0]
                        if sw == 1:
                            for ox in range(ox0, ox1):
                                arow[ox] = arow[ox] + wv * irow[ox + off]
                        else:
                            for ox in range(ox0, ox1):
                                arow[ox] = arow[ox] + wv * irow[ox * sw + off]
        for i in range(ho * wo):
            out[co, i // wo, i % wo] = <float>acc[co, i]
    return out_arr


def maxpool2d(float[:, :, ::1] inp, int kh, int kw, int sh, int sw, int ph, int pw):
    cdef int c = inp.shape[0]
    cdef int h = inp.shape[1]
    cdef int w = inp.shape[2]
    cdef int ho = (h + 2 * ph - kh) // sh + 1
    cdef int wo = (w + 2 * pw - kw) // sw + 1

    out_arr = np.empty((c, ho, wo), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr

    cdef int ci, oy, ox, ky, kx, iy, ix
    cdef float best, v
    cdef bint seen

    for ci in prange(c, nogil=True, schedule='static'):
        for oy in range(ho):
            for ox in range(wo):
                best = -3.4e38
                seen = 0
                for ky in range(kh):
                    iy = oy * sh + ky - ph
                    if iy < 0 or iy >= h:
                        continue
                    for kx in range(kw):
                        ix = ox * sw + kx - pw
                        if ix < 0 or ix >= w:
                            continue
                        v = inp[ci, iy, ix]
                        if not seen or v > best:
                            best = v
                            seen = 1
                out[ci, oy, ox] = best
    return out_arr
