"""On-disk formats: the TTAG binary tag file and the CSV artifacts.

TTAG layout (little-endian): the 4 magic bytes ``b"TTAG"``, a version byte
``0x01``, then one 9-byte record per tag: ``uint64`` timestamp in
picoseconds followed by a ``uint8`` channel (0 signal, 1 idler).
"""

from __future__ import annotations

import csv
import hashlib
import os
from pathlib import Path

import numpy as np

from .detection import Correlation, FringeCurve, TagStream, PS_PER_S
from .errors import IoFailure, TagFormatError

MAGIC = b"TTAG"
VERSION = 1
RECORD = np.dtype([("t", "<u8"), ("ch", "u1")])


def write_ttag(path, stream: TagStream) -> Path:
    path = Path(path)
    rec = np.empty(len(stream), dtype=RECORD)
    rec["t"] = stream.timestamps
    rec["ch"] = stream.channels
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC + bytes([VERSION]))
            fh.write(rec.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def read_ttag(path, duration_s: float | None = None) -> TagStream:
    """Load a TTAG file.  The format does not store the duration; unless
    given, it is taken as the last timestamp."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if data[:4] != MAGIC:
        raise TagFormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 5 or data[4] != VERSION:
        raise TagFormatError(f"{path}: unsupported version")
    body = data[5:]
    if len(body) % RECORD.itemsize:
        raise TagFormatError(f"{path}: truncated record")
    rec = np.frombuffer(body, dtype=RECORD)
    ts = rec["t"].astype(np.int64)
    if duration_s is None:
        duration_s = float(ts[-1]) / PS_PER_S if ts.size else 0.0
    return TagStream(ts, rec["ch"].copy(), duration_s)


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_fringe_csv(path, curve: FringeCurve) -> Path:
    return _write_rows(path, ["theta_rad", "probability"], ([_fmt(t), _fmt(v)] for t, v in curve))


def write_histogram_csv(path, corr: Correlation) -> Path:
    rows = ([_fmt(c), _fmt(n)] for c, n in zip(corr.bin_centers_ps(), corr.histogram))
    return _write_rows(path, ["delay_ps", "count"], rows)


def write_table_csv(path, header, rows) -> Path:
    return _write_rows(path, header, ([_fmt(v) if not isinstance(v, str) else v for v in row] for row in rows))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise IoFailure(f"{path} is not writable")
    return path
