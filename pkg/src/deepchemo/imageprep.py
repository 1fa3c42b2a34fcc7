"""Raster image decoding, bilinear resizing, and input normalization.

The normative on-disk format is binary PPM (P6, maxval 255); it keeps the
engine free of compression codecs.  Resizing is plain bilinear with
pixel-center alignment and no antialiasing prefilter -- note this differs
from MATLAB's antialiased ``imresize``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


class ImageFormatError(ValueError):
    """Unreadable or unsupported raster image."""


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB raster, pixels stored (H, W, 3) row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.uint8))
        if px.ndim != 3 or px.shape[2] != 3:
            raise ImageFormatError(f"pixels must be (H, W, 3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ImageFormatError("image dims must be positive")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class NormalizationStats:
    """Per-channel mean/std on the 0-1 scale."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(3)
        std = np.asarray(self.std, dtype=np.float64).reshape(3)
        if np.any(std <= 0):
            raise ValueError("std must be positive elementwise")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments between header tokens
    while pos < len(data):
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ImageFormatError("truncated PPM header")
    return data[start:pos], pos


def decode_image(data: bytes) -> RasterImage:
    """Decode a binary PPM (P6) byte stream."""
    if data[:2] != b"P6":
        raise ImageFormatError(f"unsupported format magic {data[:2]!r}, expected P6")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise ImageFormatError(f"bad PPM header token {tok!r}") from None
    width, height, maxval = fields
    if maxval != 255:
        raise ImageFormatError(f"maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise ImageFormatError("image dims must be positive")
    pos += 1  # single whitespace byte after maxval
    n = width * height * 3
    payload = data[pos:pos + n]
    if len(payload) < n:
        raise ImageFormatError(
            f"truncated payload: expected {n} bytes, got {len(payload)}"
        )
    px = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return RasterImage(px)


def decode_image_file(path) -> RasterImage:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def encode_ppm(img: RasterImage) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def resize_bilinear(img: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """Bilinear resize with pixel-center alignment and edge clamping.

    Source coordinate for output index d is (d + 0.5) * (in/out) - 0.5.
    Channels are interpolated independently; values round half-up to 8 bit.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output dims must be >= 1")
    if out_w == img.width and out_h == img.height:
        return RasterImage(img.pixels.copy())

    px = img.pixels.astype(np.float64)
    out = _interp_axis(px, img.height, out_h, axis=0)
    out = _interp_axis(out, img.width, out_w, axis=1)
    return RasterImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def _interp_axis(arr: np.ndarray, in_size: int, out_size: int, axis: int) -> np.ndarray:
    scale = in_size / out_size
    src = (np.arange(out_size) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, in_size - 1.0)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, in_size - 1)
    frac = src - lo
    a = np.take(arr, lo, axis=axis)
    b = np.take(arr, hi, axis=axis)
    shape = [1, 1, 1]
    shape[axis] = out_size
    frac = frac.reshape(shape)
    return a * (1.0 - frac) + b * frac


def normalize(img: RasterImage, stats: NormalizationStats,
              expected_size: tuple[int, int] | None = None) -> Tensor:
    """Map pixels to (v/255 - mean) / std and lay out as a (3, H, W) tensor."""
    if expected_size is not None and (img.height, img.width) != tuple(expected_size):
        raise ValueError(
            f"image is {img.height}x{img.width}, expected {expected_size[0]}x{expected_size[1]}"
        )
    v = img.pixels.astype(np.float64) / 255.0
    out = (v - stats.mean) / stats.std
    return Tensor(out.transpose(2, 0, 1).astype(np.float32))
