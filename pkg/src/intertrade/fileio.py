"""Small serialization helpers shared by the CLI and the study pipeline.

Every artifact is written through :func:`atomic_write` so a crashed run never
leaves a partial file under its final name.
"""
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def array_hash(values):
    """Content hash of a numeric array (dtype and byte order normalized)."""
    arr = np.ascontiguousarray(values, dtype="<f8")
    return sha256_bytes(arr.tobytes())


def fmt(x):
    """Shortest round-trip text for a number; ints stay ints."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    return repr(x)


def dumps_json(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def table_csv(header, columns, meta=None):
    """Render columns as CSV text with optional ``# key=value`` header lines."""
    lines = []
    for key, value in (meta or {}).items():
        if not isinstance(value, str):
            value = json.dumps(_plain(value), sort_keys=True)
        lines.append(f"# {key}={value}")
    lines.append(",".join(header))
    for row in zip(*columns):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_series(path, values, meta=None, name="value"):
    values = np.asarray(values)
    return atomic_write(path, table_csv([name], [values], meta))


def read_series(path):
    """Read a one-column series file; returns (values, meta).

    ``#`` lines become metadata; a non-numeric first data line is a header.
    Integer-valued files come back as int64, everything else as float64.
    """
    meta = {}
    raw = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value.strip()
                    continue
                cell = line.split(",")[0].strip()
                raw.append((lineno, cell))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if raw:
        try:
            float(raw[0][1])
        except ValueError:
            raw = raw[1:]
    try:
        if all(_is_int(c) for _, c in raw):
            values = np.array([int(c) for _, c in raw], dtype=np.int64)
        else:
            values = np.array([float(c) for _, c in raw], dtype=np.float64)
    except ValueError:
        bad = next(n for n, c in raw if not _is_float(c))
        raise DataError(f"{path}:{bad}: not a number") from None
    return values, meta


def _is_int(text):
    t = text.lstrip("+-")
    return t.isdigit()


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_table(path):
    """Read a multi-column numeric CSV with ``#`` metadata; returns (dict, meta)."""
    meta = {}
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif header is None:
                header = [h.strip() for h in line.split(",")]
            else:
                rows.append([float(c) for c in line.split(",")])
    if header is None:
        raise DataError(f"{path}: no header row")
    cols = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return {h: cols[:, i] for i, h in enumerate(header)}, meta
