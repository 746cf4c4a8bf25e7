"""Single-file binary container for trained models.

Layout (all integers little-endian):

    offset  size         field
    0       4            magic  b"SIGC"
    4       u32          container format version (currently 1)
    8       u32          metadata byte length L
    12      L            metadata, UTF-8 text of "key=value" lines
    .       u32          array count
    per array:
            u16          name byte length
            .            name, UTF-8
            u8           number of dimensions
            .            u64 per dimension (row-major shape)
            .            float64 little-endian values, row-major
    end     32           SHA-256 digest of every preceding byte

Metadata keys and array names are written in sorted order, so a given
(metadata, arrays) pair always produces identical bytes.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SIGC"
CONTAINER_VERSION = 1


class ContainerError(ValueError):
    """The file is not a valid model container (wrong magic, truncated,
    corrupted payload, or unsupported container version)."""


def write_container(path, metadata: dict, arrays: dict) -> None:
    chunks = [MAGIC, struct.pack("<I", CONTAINER_VERSION)]
    meta_text = "".join(f"{k}={metadata[k]}\n" for k in sorted(metadata))
    meta_bytes = meta_text.encode("utf-8")
    chunks.append(struct.pack("<I", len(meta_bytes)))
    chunks.append(meta_bytes)
    chunks.append(struct.pack("<I", len(arrays)))
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape) if arr.ndim else b"")
        chunks.append(arr.tobytes())
    payload = b"".join(chunks)
    digest = hashlib.sha256(payload).digest()
    Path(path).write_bytes(payload + digest)


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ContainerError(f"{self.path}: truncated container")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_container(path):
    """Read and verify a container, returning (metadata, arrays)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(MAGIC) + 4 + 32:
        raise ContainerError(f"{path}: truncated container")
    payload, digest = data[:-32], data[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise ContainerError(f"{path}: payload checksum mismatch "
                             "(truncated or corrupted file)")
    r = _Reader(payload, path)
    if r.take(len(MAGIC)) != MAGIC:
        raise ContainerError(f"{path}: not a model container (bad magic)")
    (fmt_version,) = r.unpack("<I")
    if fmt_version != CONTAINER_VERSION:
        raise ContainerError(f"{path}: container format version {fmt_version} "
                             f"is not the supported version {CONTAINER_VERSION}")
    (meta_len,) = r.unpack("<I")
    metadata = {}
    for line in r.take(meta_len).decode("utf-8").splitlines():
        if line:
            key, _, value = line.partition("=")
            metadata[key] = value
    (n_arrays,) = r.unpack("<I")
    arrays = {}
    for _ in range(n_arrays):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}Q") if ndim else ()
        count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        raw = r.take(8 * count)
        arrays[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    if r.pos != len(payload):
        raise ContainerError(f"{path}: {len(payload) - r.pos} unexpected "
                             "trailing bytes")
    return metadata, arrays
