"""Plain-text tables and binary path dumps.

Tables are tab-separated: ``# key: value`` metadata lines (values JSON
encoded, keys sorted), one header line, then the rows.  Floats are written
with 17 significant digits so a read-back is exact.  Every file is written
to a temporary name in the target directory and moved into place.

Path dumps are little-endian: the 8-byte magic ``GFPATH01``, then two
``int64`` values (records, fields), then ``records * fields`` ``float64``
values in row order.  The fields are ``s``, the nine entries of ``X`` in row
order, and the three coordinates of ``y``.
"""

import hashlib
import json
import os
import tempfile

import numpy as np

PATH_MAGIC = b"GFPATH01"
PATH_FIELDS = ("s",) + tuple(f"x{i}{j}" for i in range(3) for j in range(3)) + ("y0", "y1", "y2")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def atomic_write_bytes(path, data):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_table(columns, rows, meta=None):
    lines = []
    for key in sorted(meta or {}):
        lines.append(f"# {key}: {json.dumps(meta[key], sort_keys=True)}")
    lines.append("\t".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, header has {len(columns)}")
        lines.append("\t".join(_fmt(v) for v in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_table(path, columns, rows, meta=None):
    atomic_write_bytes(path, format_table(columns, rows, meta))
    return path


def _parse(value):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def read_table(path):
    """Return ``(meta, columns, rows)``; numeric fields are parsed."""
    meta = {}
    columns = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = json.loads(value)
            elif columns is None:
                columns = line.split("\t")
            elif line:
                rows.append([_parse(v) for v in line.split("\t")])
    if columns is None:
        raise ValueError(f"{path}: no header line")
    return meta, columns, rows


def column(columns, rows, name, dtype=float):
    i = columns.index(name)
    return np.array([r[i] for r in rows], dtype=dtype)


def write_path_dump(path, times, rotations, points):
    times = np.asarray(times, dtype="<f8")
    data = np.column_stack([times, np.asarray(rotations).reshape(len(times), 9), np.asarray(points)])
    header = PATH_MAGIC + np.array([data.shape[0], data.shape[1]], dtype="<i8").tobytes()
    atomic_write_bytes(path, header + data.astype("<f8").tobytes())
    return path


def read_path_dump(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != PATH_MAGIC:
        raise ValueError(f"{path}: not a path dump")
    records, fields = np.frombuffer(raw[8:24], dtype="<i8")
    data = np.frombuffer(raw[24:], dtype="<f8").reshape(records, fields)
    return data[:, 0], data[:, 1:10].reshape(-1, 3, 3), data[:, 10:13]


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
