"""Portable binary tensor container.

Single-tensor layout (all integers little-endian):

    magic   b"TNSR"
    dtype   uint8 code (see DTYPE_CODES)
    rank    uint8
    dims    rank x uint64
    data    row-major element bytes

Bundles hold named tensors plus a config hash (used for checkpoints):

    magic     b"TNSB"
    hash_len  uint16, then that many ASCII bytes
    count     uint32
    entries   count x (uint16 name_len, utf-8 name, single-tensor blob)
"""

import io
import struct
from pathlib import Path

import numpy as np

TENSOR_MAGIC = b"TNSR"
BUNDLE_MAGIC = b"TNSB"

DTYPE_CODES = {
    np.dtype("<f4"): 1,
    np.dtype("<f8"): 2,
    np.dtype("<i4"): 3,
    np.dtype("<i8"): 4,
    np.dtype("u1"): 5,
}
CODE_DTYPES = {v: k for k, v in DTYPE_CODES.items()}


class TensorFormatError(ValueError):
    pass


def write_tensor(buf, array: np.ndarray) -> None:
    # asarray keeps 0-d shapes; ascontiguousarray would promote them to 1-d
    array = np.asarray(array, order="C")
    dtype = array.dtype.newbyteorder("<") if array.dtype.byteorder == ">" else array.dtype
    if dtype == np.dtype(bool):
        array = array.astype("u1")
        dtype = array.dtype
    if np.dtype(dtype) not in DTYPE_CODES:
        raise TensorFormatError(f"unsupported dtype {array.dtype}")
    array = array.astype(np.dtype(dtype).newbyteorder("<"), copy=False)
    buf.write(TENSOR_MAGIC)
    buf.write(struct.pack("<BB", DTYPE_CODES[np.dtype(dtype)], array.ndim))
    buf.write(struct.pack(f"<{array.ndim}Q", *array.shape))
    buf.write(array.tobytes(order="C"))


def read_tensor(buf) -> np.ndarray:
    magic = buf.read(4)
    if magic != TENSOR_MAGIC:
        raise TensorFormatError(f"bad tensor magic {magic!r}")
    code, rank = struct.unpack("<BB", buf.read(2))
    if code not in CODE_DTYPES:
        raise TensorFormatError(f"unknown dtype code {code}")
    dims = struct.unpack(f"<{rank}Q", buf.read(8 * rank)) if rank else ()
    dtype = CODE_DTYPES[code]
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    raw = buf.read(count * dtype.itemsize)
    if len(raw) != count * dtype.itemsize:
        raise TensorFormatError("truncated tensor data")
    return np.frombuffer(raw, dtype=dtype).reshape(dims).copy()


def save_tensor(path, array: np.ndarray) -> None:
    with open(path, "wb") as f:
        write_tensor(f, array)


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        return read_tensor(f)


def save_bundle(path, tensors: dict[str, np.ndarray], config_hash: str = "") -> None:
    """Write named tensors; iteration order is preserved on load."""
    with open(path, "wb") as f:
        f.write(BUNDLE_MAGIC)
        hash_bytes = config_hash.encode("ascii")
        f.write(struct.pack("<H", len(hash_bytes)))
        f.write(hash_bytes)
        f.write(struct.pack("<I", len(tensors)))
        for name, array in tensors.items():
            name_bytes = name.encode("utf-8")
            f.write(struct.pack("<H", len(name_bytes)))
            f.write(name_bytes)
            write_tensor(f, array)


def load_bundle(path) -> tuple[dict[str, np.ndarray], str]:
    """Return (tensors, config_hash)."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != BUNDLE_MAGIC:
            raise TensorFormatError(f"bad bundle magic {magic!r}")
        (hash_len,) = struct.unpack("<H", f.read(2))
        config_hash = f.read(hash_len).decode("ascii")
        (count,) = struct.unpack("<I", f.read(4))
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", f.read(2))
            name = f.read(name_len).decode("utf-8")
            tensors[name] = read_tensor(f)
        return tensors, config_hash


def tensor_bytes(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    write_tensor(buf, array)
    return buf.getvalue()


def file_sha256(path) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()
