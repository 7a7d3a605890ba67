"""Reader and writer for big-endian IDX files (the MNIST distribution format)."""

import gzip
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..domain.exceptions import (
    BadMagicError,
    DimensionOverflowError,
    IdxFormatError,
    TruncatedPayloadError,
)
from .logger import get_logger

# IDX type code -> big-endian numpy dtype
IDX_TYPES: Dict[int, str] = {
    0x08: ">u1",
    0x09: ">i1",
    0x0B: ">i2",
    0x0C: ">i4",
    0x0D: ">f4",
    0x0E: ">f8",
}

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

_MAX_BYTES = np.iinfo(np.int64).max

MNIST_FILES = {
    True: ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    False: ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


@dataclass
class IdxArray:
    """Parsed IDX content."""

    data: np.ndarray
    magic: int

    @property
    def count(self) -> int:
        """Number of items along the first dimension."""
        return int(self.data.shape[0])

    @property
    def type_code(self) -> int:
        return (self.magic >> 8) & 0xFF


def _read_bytes(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError, zlib.error) as e:
            raise IdxFormatError(f"{path} is not a readable gzip stream: {e}")
    return raw


def parse_idx(raw: bytes, normalize: Optional[bool] = None) -> IdxArray:
    """
    Parse IDX bytes.

    Args:
        raw: File content
        normalize: Scale unsigned bytes to [0, 1] as float32. Defaults to True
            for multi-dimensional unsigned-byte payloads (images) and False
            otherwise (labels).

    Raises:
        BadMagicError: Unknown type code or malformed magic number
        TruncatedPayloadError: Header or payload shorter than declared
        DimensionOverflowError: Declared size not addressable
    """
    if len(raw) < 4:
        raise TruncatedPayloadError("File ends inside the magic number", len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic >> 16 != 0:
        raise BadMagicError(
            f"Magic number 0x{magic:08x} must start with two zero bytes", 0
        )
    type_code = (magic >> 8) & 0xFF
    if type_code not in IDX_TYPES:
        raise BadMagicError(f"Unknown IDX type code 0x{type_code:02x}", 2)
    ndim = magic & 0xFF
    if ndim == 0:
        raise BadMagicError("IDX file declares zero dimensions", 3)

    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise TruncatedPayloadError(
            f"File ends inside the header of {ndim} dimensions", len(raw)
        )
    dims: Tuple[int, ...] = struct.unpack(f">{ndim}I", raw[4:header_end])

    dtype = np.dtype(IDX_TYPES[type_code])
    size = dtype.itemsize
    for d in dims:
        size *= d
        if size > _MAX_BYTES:
            raise DimensionOverflowError(
                f"Dimensions {dims} exceed the addressable payload size", 4
            )
    if len(raw) - header_end < size:
        raise TruncatedPayloadError(
            f"Payload has {len(raw) - header_end} bytes, header declares {size}",
            len(raw),
        )

    data = np.frombuffer(
        raw, dtype=dtype, count=size // dtype.itemsize, offset=header_end
    )
    data = data.reshape(dims).astype(dtype.newbyteorder("="))
    if normalize is None:
        normalize = type_code == 0x08 and ndim > 1
    if normalize:
        data = data.astype(np.float32) / 255.0
    return IdxArray(data=data, magic=magic)


def load_idx(path: Union[str, Path], normalize: Optional[bool] = None) -> IdxArray:
    """Read an IDX file, transparently decompressing gzip content."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"IDX file does not exist: {path}")
    result = parse_idx(_read_bytes(path), normalize)
    get_logger(__name__).debug(
        f"Loaded {path.name}: magic 0x{result.magic:08x}, shape {result.data.shape}"
    )
    return result


def encode_idx(array: np.ndarray) -> bytes:
    """Serialize an array into IDX bytes."""
    array = np.asarray(array)
    for code, name in IDX_TYPES.items():
        if np.dtype(name).newbyteorder("=") == array.dtype.newbyteorder("="):
            break
    else:
        raise ValueError(f"dtype {array.dtype} has no IDX type code")
    if array.ndim < 1 or array.ndim > 255:
        raise ValueError("IDX arrays need between 1 and 255 dimensions")
    header = struct.pack(">I", (code << 8) | array.ndim)
    header += struct.pack(f">{array.ndim}I", *array.shape)
    return header + array.astype(IDX_TYPES[code]).tobytes()


def write_idx(path: Union[str, Path], array: np.ndarray) -> Path:
    """Write an array as an IDX file (gzip-compressed when the name ends in .gz)."""
    path = Path(path)
    payload = encode_idx(array)
    if path.suffix == ".gz":
        payload = gzip.compress(payload, mtime=0)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    return path


def _find(data_dir: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx")):
        candidate = data_dir / name
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"Could not find {stem}[.gz] in {data_dir}")


def load_mnist(
    data_dir: Union[str, Path], train: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Load the standard MNIST split from a directory of IDX files.

    Returns:
        Images of shape (n, 1, 28, 28) in [0, 1] and integer labels of shape (n,)
    """
    data_dir = Path(data_dir)
    images_name, labels_name = MNIST_FILES[train]
    images = load_idx(_find(data_dir, images_name))
    labels = load_idx(_find(data_dir, labels_name), normalize=False)
    if images.magic != IMAGES_MAGIC:
        raise BadMagicError(f"Expected image magic 0x{IMAGES_MAGIC:08x}", 0)
    if labels.magic != LABELS_MAGIC:
        raise BadMagicError(f"Expected label magic 0x{LABELS_MAGIC:08x}", 0)
    if images.count != labels.count:
        raise ValueError(
            f"{images.count} images but {labels.count} labels in {data_dir}"
        )
    return images.data[:, None, :, :], labels.data.astype(np.int64)
