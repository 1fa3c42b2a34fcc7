"""Writers and readers for the interchange formats this tool emits.

NNW1 archive: magic "NNW1" | version u32 LE (=1) | tensor_count u32 LE |
per tensor: name_len u16 LE, name UTF-8, dtype u8 (0 = float32), ndim u8,
ndim x u32 LE dims, float32 LE payload (last dim fastest).

VEC1 fixture: magic "VEC1" | length u32 LE | float32 LE payload.
"""

import struct

import numpy as np

MAGIC = b"NNW1"
VERSION = 1


def write_archive(entries: dict) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(entries))]
    for name, arr in entries.items():
        arr = np.ascontiguousarray(np.asarray(arr, dtype="<f4"))
        nb = name.encode("utf-8")
        parts.append(struct.pack("<H", len(nb)))
        parts.append(nb)
        parts.append(struct.pack("<BB", 0, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def read_archive(data: bytes) -> dict:
    if data[:4] != MAGIC:
        raise ValueError(f"bad magic {data[:4]!r}")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    entries = {}
    off = 12
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off:off + name_len].decode("utf-8")
        off += name_len
        dtype, ndim = struct.unpack_from("<BB", data, off)
        off += 2
        if dtype != 0:
            raise ValueError(f"{name}: unsupported dtype {dtype}")
        dims = struct.unpack_from(f"<{ndim}I", data, off)
        off += 4 * ndim
        n = int(np.prod(dims)) if ndim else 1
        entries[name] = np.frombuffer(data, "<f4", n, off).reshape(dims).copy()
        off += 4 * n
    if off != len(data):
        raise ValueError("trailing bytes")
    return entries


def write_vec(values) -> bytes:
    arr = np.asarray(values, dtype="<f4").ravel()
    return b"VEC1" + struct.pack("<I", len(arr)) + arr.tobytes()


def read_vec(data: bytes) -> np.ndarray:
    if data[:4] != b"VEC1":
        raise ValueError(f"bad magic {data[:4]!r}")
    (n,) = struct.unpack_from("<I", data, 4)
    return np.frombuffer(data, "<f4", n, 8).copy()
