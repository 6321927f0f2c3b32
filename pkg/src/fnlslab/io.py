"""Snapshot binary format, JSON/CSV writers.

Snapshot layout (little-endian):
    magic b"FNLS" | version u32 | d u32 | N u32 | L f64 | s f64 | alpha f64 | t f64
    followed by N^d interleaved (re, im) f64 pairs in row-major order.
A JSON sidecar ``<path>.json`` repeats the header for tooling.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .spectral import Field, FnlsError, Grid, ModelParams

MAGIC = b"FNLS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdddd")


class SnapshotFormatError(FnlsError):
    pass


def save_snapshot(path, f: Field, params: ModelParams, t: float = 0.0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g = f.grid
    head = _HEADER.pack(MAGIC, VERSION, g.d, g.N, g.L, params.s, params.alpha, float(t))
    payload = np.ascontiguousarray(f.values, dtype="<c16").tobytes(order="C")
    path.write_bytes(head + payload)
    side = {"magic": MAGIC.decode(), "version": VERSION, "d": g.d, "N": g.N, "L": g.L,
            "s": params.s, "alpha": params.alpha, "t": float(t), "tag": f.tag,
            "dtype": "complex128-le-interleaved", "order": "row-major"}
    write_json(sidecar_path(path), side)
    return path


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def load_snapshot(path) -> Tuple[Field, dict]:
    """Read a snapshot; returns the Field and the header as a dict."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, ver, d, N, L, s, alpha, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    if ver != VERSION:
        raise SnapshotFormatError(f"{path}: unsupported version {ver}")
    n = N ** d
    body = raw[_HEADER.size:]
    if len(body) != 16 * n:
        raise SnapshotFormatError(f"{path}: payload has {len(body)} bytes, expected {16 * n}")
    vals = np.frombuffer(body, dtype="<c16").reshape((N,) * d)
    tag = ""
    side = sidecar_path(path)
    if side.exists():
        tag = json.loads(side.read_text()).get("tag", "")
    head = {"version": ver, "d": d, "N": N, "L": L, "s": s, "alpha": alpha, "t": t}
    return Field(Grid(d, N, L), vals, tag), head


def _clean(obj):
    # JSON has no NaN/Inf; store them as strings so files stay valid
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path) -> Tuple[list, np.ndarray]:
    with open(path) as fh:
        r = csv.reader(fh)
        head = next(r)
        rows = [[float(x) if x not in ("",) else math.nan for x in row] for row in r]
    return head, np.array(rows, float).reshape(-1, len(head))
