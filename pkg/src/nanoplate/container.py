"""Binary container for solution vectors and sparse matrices.

Layout (little endian)::

    magic  b"NPLT"     4 bytes
    version            u32
    count              u32
    entries            count times:
        name length    u32, then UTF-8 name
        kind           u8   (0 = vector, 1 = CSR matrix)
        vector: n u64, then n f64
        CSR:    rows u64, cols u64, nnz u64,
                indptr (rows + 1) i64, indices nnz i64, data nnz f64

A deflection is stored as its coefficient vector plus a JSON sidecar that
describes the spline space, so it can be rebuilt without the config.
"""
import json
import struct
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .discretization import SplineSpace
from .errors import ValidationError
from .solver import Deflection

MAGIC = b"NPLT"
VERSION = 1
_VECTOR, _CSR = 0, 1


def write_container(path, entries):
    """Write ``{name: ndarray | sparse matrix}`` in insertion order."""
    with Path(path).open("wb") as fh:
        fh.write(MAGIC + struct.pack("<II", VERSION, len(entries)))
        for name, obj in entries.items():
            raw = name.encode()
            fh.write(struct.pack("<I", len(raw)) + raw)
            if sp.issparse(obj):
                A = sp.csr_matrix(obj)
                fh.write(struct.pack("<BQQQ", _CSR, A.shape[0], A.shape[1], A.nnz))
                fh.write(A.indptr.astype("<i8").tobytes())
                fh.write(A.indices.astype("<i8").tobytes())
                fh.write(A.data.astype("<f8").tobytes())
            else:
                v = np.asarray(obj, "<f8").ravel()
                fh.write(struct.pack("<BQ", _VECTOR, v.size) + v.tobytes())


def read_container(path):
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValidationError(f"{path}: not a solution container")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported container version {version}")
    pos = 12
    out = {}

    def take(n, dtype):
        nonlocal pos
        arr = np.frombuffer(data, dtype, n, pos).copy()
        pos += n * np.dtype(dtype).itemsize
        return arr

    for _ in range(count):
        (ln,) = struct.unpack_from("<I", data, pos)
        name = data[pos + 4:pos + 4 + ln].decode()
        pos += 4 + ln
        (kind,) = struct.unpack_from("<B", data, pos)
        pos += 1
        if kind == _VECTOR:
            (n,) = struct.unpack_from("<Q", data, pos)
            pos += 8
            out[name] = take(n, "<f8")
        elif kind == _CSR:
            rows, cols, nnz = struct.unpack_from("<QQQ", data, pos)
            pos += 24
            indptr = take(rows + 1, "<i8")
            indices = take(nnz, "<i8")
            vals = take(nnz, "<f8")
            out[name] = sp.csr_matrix((vals, indices, indptr), shape=(rows, cols))
        else:
            raise ValidationError(f"{path}: unknown entry kind {kind}")
    return out


def save_deflection(w, stem, extra=None):
    """``stem.bin`` with the coefficients (and ``extra`` entries), ``stem.json`` with the space."""
    stem = Path(stem)
    write_container(stem.with_suffix(".bin"), {"coefs": w.coefs, **(extra or {})})
    meta = {"space": w.space.describe(), "meta": w.meta}
    stem.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=2, default=float))
    return stem.with_suffix(".bin")


def load_deflection(stem):
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    space = SplineSpace.from_description(meta["space"])
    coefs = read_container(stem.with_suffix(".bin"))["coefs"]
    return Deflection(space, coefs, meta.get("meta"))
