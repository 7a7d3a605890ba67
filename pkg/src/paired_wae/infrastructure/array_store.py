"""Flat binary arrays with a small JSON header."""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from ..domain.exceptions import CorruptArchiveError

MAGIC = b"PWAR"
FORMAT_VERSION = 1
ARRAY_SUFFIX = ".pwa"


@dataclass
class StoredArray:
    """An array together with the provenance stored in its header."""

    data: np.ndarray
    config_hash: str
    seed: Optional[int] = None
    attributes: Dict[str, Any] = field(default_factory=dict)


def write_array(
    path: Union[str, Path],
    array: np.ndarray,
    config_hash: str,
    seed: Optional[int] = None,
    attributes: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write ``MAGIC | u32 header length | JSON header | C-order little-endian payload``.

    The header records dtype, shape, seed and config hash.
    """
    path = Path(path)
    array = np.ascontiguousarray(array)
    dtype = array.dtype.newbyteorder("<")
    header = {
        "version": FORMAT_VERSION,
        "dtype": dtype.str,
        "shape": list(array.shape),
        "seed": seed,
        "config_hash": config_hash,
        "attributes": attributes or {},
    }
    header_text = json.dumps(header, sort_keys=True, separators=(",", ":"))
    header_bytes = header_text.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        f.write(array.astype(dtype, copy=False).tobytes())
    return path


def read_array(path: Union[str, Path]) -> StoredArray:
    """
    Inverse of :func:`write_array`.

    Raises:
        CorruptArchiveError: On a wrong magic, unreadable header or short payload
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise CorruptArchiveError(f"{path} is not an array file (bad magic)")
    if len(raw) < 8:
        raise CorruptArchiveError(f"{path} ends inside the header length")
    (length,) = struct.unpack("<I", raw[4:8])
    try:
        header = json.loads(raw[8 : 8 + length].decode("utf-8"))
        dtype = np.dtype(header["dtype"])
        shape = tuple(int(s) for s in header["shape"])
    except (ValueError, KeyError, TypeError) as e:
        raise CorruptArchiveError(f"{path} has an unreadable header: {e}")

    payload = raw[8 + length :]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(payload) != expected:
        raise CorruptArchiveError(
            f"{path} payload has {len(payload)} bytes, header declares {expected}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(shape)
    data = data.astype(dtype.newbyteorder("="))
    return StoredArray(
        data=data,
        config_hash=str(header.get("config_hash", "")),
        seed=header.get("seed"),
        attributes=dict(header.get("attributes", {})),
    )
