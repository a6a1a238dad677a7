"""Bit-exact binary tensor persistence (the FST1 format).

Layout, all little-endian:

    bytes 0-3   magic ``b"FST1"``
    byte  4     dtype code: 0 = float32, 1 = float64
    byte  5     ndim (>= 1; scalars are stored as dims=[1])
    bytes 6-7   zero padding
    then        ndim unsigned 64-bit extents
    then        row-major payload, product(dims) scalars

File size is exactly ``8 + 8*ndim + itemsize*product(dims)``.  There is no
compression or alignment padding, so a write/read round trip is bit-identical
for every finite value, signed zeros included.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import NonFiniteInputError

MAGIC = b"FST1"

_DTYPE_BY_CODE = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODE_BY_DTYPE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


class TensorFormatError(Exception):
    """Base class for malformed FST1 files."""


class BadMagicError(TensorFormatError):
    pass


class TruncatedFileError(TensorFormatError):
    pass


class UnsupportedDtypeError(TensorFormatError):
    pass


class InvalidHeaderError(TensorFormatError):
    """Zero ndim, zero extent, nonzero padding, or surplus payload."""


def write_tensor(path: str | Path, t: np.ndarray) -> None:
    """Write `t` to `path` in FST1 format.

    Accepts float32/float64 arrays; 0-d inputs are stored as dims=[1].
    Rejects non-finite values so golden files always round trip bit-exactly.
    """
    arr = np.asarray(t)
    if arr.dtype not in _CODE_BY_DTYPE:
        raise ValueError(f"unsupported dtype {arr.dtype}; only float32/float64 are storable")
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim > 255:
        raise ValueError("ndim exceeds the single header byte")
    if any(e <= 0 for e in arr.shape):
        raise ValueError(f"all extents must be positive, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError("tensor contains NaN or infinity; refusing to write")

    code = _CODE_BY_DTYPE[arr.dtype]
    header = MAGIC + bytes([code, arr.ndim, 0, 0])
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr).astype(_DTYPE_BY_CODE[code], copy=False).tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor(path: str | Path) -> np.ndarray:
    """Read an FST1 file back into an array with the stored dtype and dims."""
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise TruncatedFileError(f"{path}: shorter than the 4-byte magic")
    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 8:
        raise TruncatedFileError(f"{path}: truncated fixed header")
    code, ndim = data[4], data[5]
    if code not in _DTYPE_BY_CODE:
        raise UnsupportedDtypeError(f"{path}: dtype code {code} > 1")
    if ndim == 0:
        raise InvalidHeaderError(f"{path}: ndim is 0")
    if data[6:8] != b"\x00\x00":
        raise InvalidHeaderError(f"{path}: nonzero header padding")

    dims_end = 8 + 8 * ndim
    if len(data) < dims_end:
        raise TruncatedFileError(f"{path}: truncated extents block")
    dims = struct.unpack_from(f"<{ndim}Q", data, 8)
    if any(e == 0 for e in dims):
        raise InvalidHeaderError(f"{path}: zero extent in dims {dims}")

    dtype = _DTYPE_BY_CODE[code]
    count = 1
    for e in dims:
        count *= e
    expected = dims_end + count * dtype.itemsize
    if len(data) < expected:
        raise TruncatedFileError(
            f"{path}: payload is {expected - len(data)} bytes short of {count} scalars"
        )
    if len(data) > expected:
        raise InvalidHeaderError(f"{path}: {len(data) - expected} surplus bytes after payload")

    flat = np.frombuffer(data, dtype=dtype, count=count, offset=dims_end)
    return flat.reshape(dims).astype(dtype.newbyteorder("="), copy=True)
