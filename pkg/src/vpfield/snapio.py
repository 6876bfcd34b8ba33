"""Snapshot persistence: one JSON header line + raw little-endian payload.

Layout: a UTF-8 JSON object terminated by a newline carrying the format
version, endianness tag, field kind and full grid metadata, followed by the
node values in index order as 8-byte little-endian reals -- (re, im) pairs
for complex kinds, single reals otherwise.  Writes are atomic (temp file +
rename) so a crashed run never leaves a truncated snapshot behind.
"""

import json
import os
import tempfile

import numpy as np

from .errors import VpfieldError
from .fields import (RealField, SpatialComplexVectorField, SpatialField,
                     SpatialVectorField, WaveField)
from .grid import GridConfig, PhaseGrid, make_grid

FORMAT_NAME = "vpfield-snapshot"
FORMAT_VERSION = 1

_KINDS = {
    "wave": (WaveField, np.complex128),
    "real": (RealField, np.float64),
    "spatial": (SpatialField, None),          # dtype recorded separately
    "spatial_vector": (SpatialVectorField, np.float64),
    "spatial_cvector": (SpatialComplexVectorField, np.complex128),
}


def field_kind(field):
    for name, (cls, _) in _KINDS.items():
        if type(field) is cls:
            return name
    raise VpfieldError(f"unsupported field type {type(field).__name__}")


def _grid_meta(grid):
    return {
        "d": grid.d, "nx": list(grid.nx), "nv": list(grid.nv),
        "x_lo": list(grid.x_lo), "x_hi": list(grid.x_hi),
        "v_lo": list(grid.v_lo), "v_hi": list(grid.v_hi),
    }


def _grid_from_meta(meta):
    return make_grid(GridConfig(
        d=meta["d"], nx=tuple(meta["nx"]), nv=tuple(meta["nv"]),
        x_lo=tuple(meta["x_lo"]), x_hi=tuple(meta["x_hi"]),
        v_lo=tuple(meta["v_lo"]), v_hi=tuple(meta["v_hi"])))


def atomic_write_bytes(path, payload: bytes):
    """Write bytes to path via a temp file in the same directory + rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".vpfield-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_snapshot(path, field):
    """Serialize a field to ``path`` atomically."""
    kind = field_kind(field)
    complex_payload = np.iscomplexobj(field.values)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "endianness": "little",
        "kind": kind,
        "complex": bool(complex_payload),
        "grid": _grid_meta(field.grid),
    }
    values = np.ascontiguousarray(field.values)
    if complex_payload:
        payload = values.astype("<c16").tobytes()
    else:
        payload = values.astype("<f8").tobytes()
    blob = (json.dumps(header, sort_keys=True) + "\n").encode("utf-8") + payload
    atomic_write_bytes(path, blob)


def read_snapshot(path):
    """Read a snapshot back into the matching field type."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise VpfieldError(f"bad snapshot header in {path}: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise VpfieldError(f"{path} is not a {FORMAT_NAME} file")
    if header.get("version") != FORMAT_VERSION:
        raise VpfieldError(
            f"snapshot version {header.get('version')} unsupported "
            f"(expected {FORMAT_VERSION})")
    kind = header.get("kind")
    if kind not in _KINDS:
        raise VpfieldError(f"unknown snapshot kind {kind!r}")
    grid = _grid_from_meta(header["grid"])
    cls, _ = _KINDS[kind]

    if kind in ("wave", "real"):
        shape = grid.shape
    elif kind == "spatial":
        shape = grid.xshape
    else:
        shape = (grid.d,) + grid.xshape

    dtype = "<c16" if header.get("complex") else "<f8"
    values = np.frombuffer(payload, dtype=dtype)
    expect = int(np.prod(shape, dtype=np.int64))
    if values.size != expect:
        raise VpfieldError(
            f"snapshot payload holds {values.size} values, expected {expect}")
    return cls(grid, values.reshape(shape).copy())
