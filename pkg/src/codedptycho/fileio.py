"""Binary array formats, JSON and atomic file writes.

Complex image (``.cpty``)::

    b"CPTY0001" | u32 rows | u32 cols | rows*cols (re, im) float64 pairs

Data stack (``.stk``)::

    b"CPTYSTK1" | u32 count | u32 rows | u32 cols | u8 kind | payload

``kind`` is 0 for complex blocks (interleaved float64 pairs) and 1 for
modulus blocks (float64). Everything is little-endian and row-major.
"""
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ._validation import DimensionError

__all__ = [
    "IMAGE_MAGIC",
    "STACK_MAGIC",
    "encode_image",
    "decode_image",
    "encode_stack",
    "decode_stack",
    "write_image",
    "read_image",
    "write_stack",
    "read_stack",
    "atomic_write",
    "write_json",
]

IMAGE_MAGIC = b"CPTY0001"
STACK_MAGIC = b"CPTYSTK1"
KIND_COMPLEX = 0
KIND_MODULUS = 1


class FormatError(ValueError):
    pass


def encode_image(x):
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {x.shape}")
    header = IMAGE_MAGIC + struct.pack("<II", *x.shape)
    return header + np.ascontiguousarray(x).astype("<c16").tobytes()


def decode_image(data):
    if data[:8] != IMAGE_MAGIC:
        raise FormatError("not a CPTY0001 complex image")
    rows, cols = struct.unpack_from("<II", data, 8)
    payload = data[16:]
    if len(payload) != rows * cols * 16:
        raise FormatError(f"payload length {len(payload)} does not match {rows}x{cols}")
    return np.frombuffer(payload, dtype="<c16").astype(np.complex128).reshape(rows, cols)


def encode_stack(blocks):
    """Encode a (count, rows, cols) stack; complex dtype selects kind 0."""
    blocks = np.asarray(blocks)
    if blocks.ndim != 3:
        raise DimensionError(f"expected a 3-D stack, got shape {blocks.shape}")
    if np.iscomplexobj(blocks):
        kind, body = KIND_COMPLEX, blocks.astype("<c16")
    else:
        kind, body = KIND_MODULUS, blocks.astype("<f8")
    header = STACK_MAGIC + struct.pack("<IIIB", *blocks.shape, kind)
    return header + np.ascontiguousarray(body).tobytes()


def decode_stack(data):
    if data[:8] != STACK_MAGIC:
        raise FormatError("not a CPTYSTK1 data stack")
    count, rows, cols, kind = struct.unpack_from("<IIIB", data, 8)
    payload = data[8 + 13:]
    if kind == KIND_COMPLEX:
        dtype, width = "<c16", 16
    elif kind == KIND_MODULUS:
        dtype, width = "<f8", 8
    else:
        raise FormatError(f"unknown stack kind {kind}")
    if len(payload) != count * rows * cols * width:
        raise FormatError("payload length does not match header")
    arr = np.frombuffer(payload, dtype=dtype).reshape(count, rows, cols)
    return arr.astype(np.complex128 if kind == KIND_COMPLEX else np.float64)


def atomic_write(path, data):
    """Write ``data`` (bytes or str) to ``path`` via a temp file and rename."""
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


def write_image(path, x):
    atomic_write(path, encode_image(x))


def read_image(path):
    return decode_image(Path(path).read_bytes())


def write_stack(path, blocks):
    atomic_write(path, encode_stack(blocks))


def read_stack(path):
    return decode_stack(Path(path).read_bytes())


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n")
