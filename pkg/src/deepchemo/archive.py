"""Portable named-tensor weight archive ("NNW1").

Binary layout, all integers little-endian:

    magic "NNW1" | version u32 (=1) | tensor_count u32 |
    per tensor: name_len u16, name UTF-8, dtype u8 (0 = float32),
                ndim u8, ndim x u32 dims, payload float32 LE (last dim fastest)

The archive must carry "meta.mean" and "meta.std" (length-3 normalization
constants recorded by the exporter), and nothing may follow the last tensor.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"NNW1"
VERSION = 1
DTYPE_F32 = 0


class ArchiveError(ValueError):
    """Malformed or incomplete weight archive."""


@dataclass(frozen=True)
class WeightArchive:
    """Validated, immutable name -> float32 array container."""

    entries: dict
    version: int = VERSION

    def __post_init__(self):
        for key in ("meta.mean", "meta.std"):
            if key not in self.entries:
                raise ArchiveError(f"missing metadata entry {key!r}")
            if self.entries[key].shape != (3,):
                raise ArchiveError(f"{key!r} must have length 3")
        if np.any(self.entries["meta.std"] <= 0):
            raise ArchiveError("meta.std must be positive elementwise")

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.entries[name]
        except KeyError:
            raise ArchiveError(f"missing tensor {name!r}") from None

    def names(self):
        return list(self.entries)

    @property
    def mean(self) -> np.ndarray:
        return self.entries["meta.mean"]

    @property
    def std(self) -> np.ndarray:
        return self.entries["meta.std"]


def load_archive(data: bytes) -> WeightArchive:
    """Parse and validate an NNW1 byte stream."""
    if data[:4] != MAGIC:
        raise ArchiveError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 12:
        raise ArchiveError("truncated header")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ArchiveError(f"unsupported version {version}")

    entries = {}
    off = 12
    for _ in range(count):
        if off + 2 > len(data):
            raise ArchiveError("truncated tensor header")
        (name_len,) = struct.unpack_from("<H", data, off)
        off += 2
        if off + name_len + 2 > len(data):
            raise ArchiveError("truncated tensor name")
        name = data[off:off + name_len].decode("utf-8")
        off += name_len
        dtype, ndim = struct.unpack_from("<BB", data, off)
        off += 2
        if dtype != DTYPE_F32:
            raise ArchiveError(f"tensor {name!r}: unsupported dtype {dtype}")
        if off + 4 * ndim > len(data):
            raise ArchiveError(f"tensor {name!r}: truncated dims")
        dims = struct.unpack_from(f"<{ndim}I", data, off) if ndim else ()
        off += 4 * ndim
        n = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        nbytes = 4 * n
        if off + nbytes > len(data):
            raise ArchiveError(f"tensor {name!r}: truncated payload")
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=off).reshape(dims)
        off += nbytes
        if name in entries:
            raise ArchiveError(f"duplicate tensor name {name!r}")
        entries[name] = arr.astype(np.float32)

    if off != len(data):
        raise ArchiveError(f"{len(data) - off} trailing bytes after last tensor")
    return WeightArchive(entries, version)


def load_archive_file(path) -> WeightArchive:
    with open(path, "rb") as fh:
        return load_archive(fh.read())


def save_archive(entries: dict) -> bytes:
    """Serialize name -> array entries into NNW1 bytes (insertion order)."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(entries))]
    for name, arr in entries.items():
        arr = np.ascontiguousarray(np.asarray(arr, dtype="<f4"))
        name_b = name.encode("utf-8")
        parts.append(struct.pack("<H", len(name_b)))
        parts.append(name_b)
        parts.append(struct.pack("<BB", DTYPE_F32, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)
