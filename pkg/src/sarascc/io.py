"""File formats: the NNMX binary matrix container and JSON documents.

NNMX layout (little-endian)::

    b"NNMX" | u32 version (1) | u8 complex flag | u64 rows | u64 cols | f64 data

Data are row-major; complex matrices interleave (re, im) per entry.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import InputError
from .scattering import AscParameterSet, RadarGrid

MAGIC = b"NNMX"
VERSION = 1
_HEADER = struct.Struct("<4sIBQQ")


def encode_nnmx(matrix) -> bytes:
    m = np.asarray(matrix)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise InputError(f"NNMX holds 2-D matrices, got shape {m.shape}")
    is_complex = np.iscomplexobj(m)
    header = _HEADER.pack(MAGIC, VERSION, int(is_complex), m.shape[0], m.shape[1])
    if is_complex:
        body = np.ascontiguousarray(m, dtype="<c16").tobytes()
    else:
        body = np.ascontiguousarray(m, dtype="<f8").tobytes()
    return header + body


def decode_nnmx(blob: bytes) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise InputError("NNMX data shorter than its header")
    magic, version, flag, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise InputError(f"bad NNMX magic {magic!r}")
    if version != VERSION:
        raise InputError(f"unsupported NNMX version {version}")
    if flag not in (0, 1):
        raise InputError(f"bad NNMX complex flag {flag}")
    width = 16 if flag else 8
    expected = _HEADER.size + rows * cols * width
    if len(blob) != expected:
        raise InputError(f"NNMX payload is {len(blob)} bytes, expected {expected}")
    dtype = "<c16" if flag else "<f8"
    data = np.frombuffer(blob, dtype=dtype, offset=_HEADER.size).reshape(rows, cols)
    return data.astype(complex if flag else float)


def write_nnmx(path, matrix) -> None:
    Path(path).write_bytes(encode_nnmx(matrix))


def read_nnmx(path) -> np.ndarray:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return decode_nnmx(blob)


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from None


def write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def scene_to_dict(grid: RadarGrid, scatterers) -> dict:
    return {"grid": grid.to_dict(), "scatterers": [s.to_dict() for s in scatterers]}


def scene_from_dict(doc) -> tuple[RadarGrid, list]:
    """Parse a scene document into its grid and scatterer list."""
    if not isinstance(doc, dict) or "grid" not in doc or "scatterers" not in doc:
        raise InputError("scene needs 'grid' and 'scatterers' keys")
    if not isinstance(doc["grid"], dict) or not isinstance(doc["scatterers"], list):
        raise InputError("scene 'grid' must be an object and 'scatterers' a list")
    grid = RadarGrid.from_dict(doc["grid"])
    try:
        scatterers = [AscParameterSet.from_dict(s) for s in doc["scatterers"]]
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad scatterer entry: {exc}") from None
    return grid, scatterers


def scatterers_from_extraction(doc) -> list:
    """Parameter sets from an extraction report (coefficients ignored)."""
    if not isinstance(doc, dict) or not isinstance(doc.get("scatterers"), list):
        raise InputError("extraction report needs a 'scatterers' list")
    try:
        return [AscParameterSet.from_dict(s) for s in doc["scatterers"]]
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad scatterer entry: {exc}") from None
