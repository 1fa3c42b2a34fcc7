"""Hyperspectral cube ingestion, pseudo-RGB construction, and mean spectra.

Cube file layout ("HCB1", little-endian):

    magic "HCB1" | u32 H, W, B | B x float32 wavelengths (nm, increasing) |
    H*W*B float32, band-sequential (band, then row, then column) |
    optional mask chunk: magic "MASK" + H*W bytes (nonzero = foreground)

Pseudo-RGB channels are min-max rescaled over foreground pixels only, per
image; background pixels are written as 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .imageprep import RasterImage

MAGIC = b"HCB1"
MASK_MAGIC = b"MASK"


class CubeError(ValueError):
    """Malformed cube file or invalid cube operation."""


@dataclass(frozen=True)
class HyperCube:
    """Reflectance cube: data (B, H, W), wavelengths in nm, optional mask."""

    data: np.ndarray
    wavelengths: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        data = np.ascontiguousarray(np.asarray(self.data, dtype=np.float32))
        wl = np.asarray(self.wavelengths, dtype=np.float64).reshape(-1)
        if data.ndim != 3:
            raise CubeError(f"cube data must be (B, H, W), got {data.shape}")
        if wl.shape[0] != data.shape[0]:
            raise CubeError(
                f"{wl.shape[0]} wavelengths for {data.shape[0]} bands"
            )
        if wl.shape[0] > 1 and np.any(np.diff(wl) <= 0):
            raise CubeError("wavelengths must be strictly increasing")
        mask = self.mask
        if mask is not None:
            mask = np.ascontiguousarray(np.asarray(mask, dtype=np.uint8))
            if mask.shape != data.shape[1:]:
                raise CubeError(
                    f"mask dims {mask.shape} do not match field {data.shape[1:]}"
                )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "mask", mask)

    @property
    def dims(self) -> tuple[int, int, int]:
        b, h, w = self.data.shape
        return h, w, b

    def foreground(self) -> np.ndarray:
        """Boolean (H, W) foreground map; all-true when no mask is present."""
        if self.mask is None:
            return np.ones(self.data.shape[1:], dtype=bool)
        return self.mask != 0


@dataclass(frozen=True)
class BandTriplet:
    """Target (r, g, b) wavelengths in nm; nearest band wins, ties go to
    the lower index."""

    red: float
    green: float
    blue: float

    def resolve(self, wavelengths: np.ndarray) -> tuple[int, int, int]:
        wl = np.asarray(wavelengths, dtype=np.float64)
        return tuple(int(np.argmin(np.abs(wl - t)))
                     for t in (self.red, self.green, self.blue))


@dataclass(frozen=True)
class PseudoRgb:
    """Pseudo-RGB rendering plus per-channel degeneracy flags."""

    image: RasterImage
    degenerate: tuple[bool, bool, bool]
    band_indices: tuple[int, int, int] | None = None
    axes: np.ndarray | None = None   # B x k projection axes (PCA route only)


def load_cube(data: bytes) -> HyperCube:
    """Parse and validate an HCB1 byte stream."""
    if data[:4] != MAGIC:
        raise CubeError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 16:
        raise CubeError("truncated header")
    h, w, b = struct.unpack_from("<III", data, 4)
    if min(h, w, b) < 1:
        raise CubeError(f"dims must be positive, got {(h, w, b)}")
    off = 16
    if off + 4 * b > len(data):
        raise CubeError("truncated wavelength axis")
    wl = np.frombuffer(data, dtype="<f4", count=b, offset=off).astype(np.float64)
    off += 4 * b
    n = h * w * b
    if off + 4 * n > len(data):
        raise CubeError("truncated cube payload")
    cube = np.frombuffer(data, dtype="<f4", count=n, offset=off)
    cube = cube.reshape(b, h, w).astype(np.float32)
    off += 4 * n
    mask = None
    if off < len(data):
        if data[off:off + 4] != MASK_MAGIC:
            raise CubeError("unexpected bytes after cube payload")
        off += 4
        if off + h * w > len(data):
            raise CubeError("truncated mask chunk")
        mask = np.frombuffer(data, dtype=np.uint8, count=h * w, offset=off)
        mask = mask.reshape(h, w)
        off += h * w
    if off != len(data):
        raise CubeError(f"{len(data) - off} trailing bytes")
    return HyperCube(cube, wl, mask)


def load_cube_file(path) -> HyperCube:
    with open(path, "rb") as fh:
        return load_cube(fh.read())


def save_cube(cube: HyperCube) -> bytes:
    b, h, w = cube.data.shape
    parts = [
        MAGIC,
        struct.pack("<III", h, w, b),
        cube.wavelengths.astype("<f4").tobytes(),
        np.ascontiguousarray(cube.data, dtype="<f4").tobytes(),
    ]
    if cube.mask is not None:
        parts += [MASK_MAGIC, cube.mask.tobytes()]
    return b"".join(parts)


def _rescale_channels(planes: np.ndarray, fg: np.ndarray) -> tuple[np.ndarray, list]:
    """Per-channel foreground min-max to 0..255 (round half-up); returns the
    (H, W, k) byte image and per-channel degeneracy flags."""
    k = planes.shape[0]
    h, w = fg.shape
    out = np.zeros((h, w, k), dtype=np.uint8)
    degenerate = []
    for i in range(k):
        vals = planes[i][fg]
        lo, hi = float(vals.min()), float(vals.max())
        if hi == lo:
            degenerate.append(True)
            continue
        degenerate.append(False)
        scaled = (planes[i].astype(np.float64) - lo) / (hi - lo) * 255.0
        chan = np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)
        out[:, :, i] = np.where(fg, chan, 0)
    return out, degenerate


def select_bands(cube: HyperCube, triplet: BandTriplet) -> PseudoRgb:
    """Extract the nearest bands to the requested wavelengths and rescale."""
    if cube.data.shape[0] < 3:
        raise CubeError("cube must have at least 3 bands")
    fg = cube.foreground()
    if not fg.any():
        raise CubeError("mask has no foreground pixels")
    idx = triplet.resolve(cube.wavelengths)
    planes = cube.data[list(idx)]
    out, degenerate = _rescale_channels(planes, fg)
    return PseudoRgb(RasterImage(out), tuple(degenerate), idx)


def pca_compress(cube: HyperCube, k: int = 3) -> PseudoRgb:
    """Project foreground spectra onto the first k principal axes.

    Covariance eigendecomposition over the band axis; eigenvalues sorted
    descending; each axis's sign is fixed so its largest-|loading| element
    is positive.
    """
    b = cube.data.shape[0]
    if b < k:
        raise CubeError(f"cube has {b} bands, need at least {k}")
    fg = cube.foreground()
    n_fg = int(fg.sum())
    if n_fg < k + 1:
        raise CubeError(f"need at least {k + 1} foreground pixels, have {n_fg}")

    spectra = cube.data.transpose(1, 2, 0)[fg].astype(np.float64)  # n_fg x B
    centered = spectra - spectra.mean(axis=0)
    cov = centered.T @ centered / (n_fg - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]

    tol = max(evals[0], 0.0) * 1e-10
    rank = int(np.sum(evals > tol))
    if rank < 1:
        raise CubeError("spectral rank 0: all foreground spectra are identical")

    # Components beyond the spectral rank carry no variance; zero their
    # projections outright so the rescale flags them degenerate.
    axes = evecs[:, :k]
    flip = np.sign(axes[np.argmax(np.abs(axes), axis=0), np.arange(k)])
    flip[flip == 0] = 1.0
    axes = axes * flip

    proj = centered @ axes
    proj[:, rank:] = 0.0
    planes = np.zeros((k,) + fg.shape)
    planes[:, fg] = proj.T
    out, degenerate = _rescale_channels(planes, fg)
    return PseudoRgb(RasterImage(out), tuple(degenerate), axes=axes)


def mean_spectrum(cube: HyperCube) -> np.ndarray:
    """Per-band arithmetic mean over foreground pixels."""
    fg = cube.foreground()
    if not fg.any():
        raise CubeError("mask has no foreground pixels")
    return cube.data.transpose(1, 2, 0)[fg].astype(np.float64).mean(axis=0)
