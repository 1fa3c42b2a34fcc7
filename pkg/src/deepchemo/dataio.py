"""CSV and small-file I/O shared by the pipeline commands.

All CSVs are UTF-8 with LF line endings and a header row.  Floats are
written with shortest round-trip formatting so identical runs produce
byte-identical files.  Writes go to a temp file in the target directory
followed by an atomic rename.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
import tempfile

import numpy as np

from .pls import DataBlock, PlsError, ResponseVector


def _fmt(v) -> str:
    return repr(float(v))


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def read_manifest(path) -> list[tuple[str, str]]:
    """Read an `id,path` manifest; relative paths resolve against the CSV."""
    base = os.path.dirname(os.fspath(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["id", "path"]:
            raise ValueError(f"{path}: manifest must start with an 'id,path' header")
        out = []
        for row in reader:
            if not row:
                continue
            if len(row) < 2:
                raise ValueError(f"{path}: malformed manifest row {row!r}")
            p = row[1]
            if not os.path.isabs(p):
                p = os.path.join(base, p)
            out.append((row[0], p))
    return out


def write_features_csv(path, ids, matrix) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    header = ["id"] + [f"v{i + 1}" for i in range(matrix.shape[1])]
    rows = [header]
    for sid, row in zip(ids, matrix):
        rows.append([sid] + [_fmt(v) for v in row])
    atomic_write_text(path, _rows_to_csv(rows))


def read_features_csv(path, tag: str = "") -> DataBlock:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "id":
            raise ValueError(f"{path}: feature CSV must have an 'id,...' header")
        ids, rows = [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    if not ids:
        raise PlsError(f"{path}: no samples")
    return DataBlock(tuple(ids), np.array(rows, dtype=np.float64), tag)


def read_response_csv(path) -> ResponseVector:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["id", "value"]:
            raise ValueError(f"{path}: response CSV must have an 'id,value' header")
        ids, vals = [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            vals.append(float(row[1]))
    return ResponseVector(tuple(ids), np.array(vals))


def write_spectra_csv(path, ids, wavelengths, matrix) -> None:
    header = ["id"] + [f"w{_fmt_wl(w)}" for w in wavelengths]
    rows = [header]
    for sid, row in zip(ids, matrix):
        rows.append([sid] + [_fmt(v) for v in row])
    atomic_write_text(path, _rows_to_csv(rows))


def _fmt_wl(w) -> str:
    w = float(w)
    return str(int(w)) if w == int(w) else repr(w)


def write_curve_csv(path, rmsecv) -> None:
    rows = [["lv", "rmsecv"]]
    rows += [[str(a + 1), _fmt(v)] for a, v in enumerate(rmsecv)]
    atomic_write_text(path, _rows_to_csv(rows))


def write_grid_csv(path, grid) -> None:
    rows = [["a1", "a2", "rmsecv"]]
    for a1 in range(grid.shape[0]):
        for a2 in range(grid.shape[1]):
            rows.append([str(a1), str(a2), _fmt(grid[a1, a2])])
    atomic_write_text(path, _rows_to_csv(rows))


def write_predictions_csv(path, ids, y_pred, y_true=None) -> None:
    if y_true is None:
        rows = [["id", "y_pred"]]
        rows += [[sid, _fmt(p)] for sid, p in zip(ids, y_pred)]
    else:
        rows = [["id", "y_true", "y_pred"]]
        rows += [[sid, _fmt(t), _fmt(p)] for sid, t, p in zip(ids, y_true, y_pred)]
    atomic_write_text(path, _rows_to_csv(rows))


def read_predictions_csv(path):
    """Returns (ids, y_true or None, y_pred)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header not in (["id", "y_pred"], ["id", "y_true", "y_pred"]):
            raise ValueError(f"{path}: unrecognized predictions header {header}")
        has_true = len(header) == 3
        ids, y_true, y_pred = [], [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            if has_true:
                y_true.append(float(row[1]))
            y_pred.append(float(row[-1]))
    return ids, (np.array(y_true) if has_true else None), np.array(y_pred)


def read_vec(path) -> np.ndarray:
    """Read a "VEC1" fixture file: magic | u32 LE length | float32 LE payload."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != b"VEC1":
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    n = int.from_bytes(data[4:8], "little")
    if len(data) != 8 + 4 * n:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(data, dtype="<f4", count=n, offset=8).copy()


def write_vec(path, values) -> None:
    arr = np.asarray(values, dtype="<f4").ravel()
    atomic_write_bytes(path, b"VEC1" + len(arr).to_bytes(4, "little") + arr.tobytes())


def write_keyvalues(path, pairs) -> None:
    """Plain `key=value` text, one pair per line."""
    lines = [f"{k}={v}" for k, v in pairs]
    atomic_write_text(path, "\n".join(lines) + "\n")
