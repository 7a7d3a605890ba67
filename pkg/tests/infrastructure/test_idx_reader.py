"""Tests for the IDX reader."""

import struct
from pathlib import Path

import numpy as np
import pytest

from paired_wae.domain.exceptions import (
    BadMagicError,
    DimensionOverflowError,
    IdxFormatError,
    TruncatedPayloadError,
)
from paired_wae.infrastructure.idx_reader import (
    IMAGES_MAGIC,
    encode_idx,
    load_idx,
    load_mnist,
    parse_idx,
    write_idx,
)


def _two_images() -> np.ndarray:
    images = np.zeros((2, 28, 28), dtype=np.uint8)
    images[0, 5, 5] = 255
    images[1, :, 14] = 128
    return images


class TestParseIdx:
    """Test cases for parse_idx."""

    def test_roundtrip_is_bit_exact(self) -> None:
        images = _two_images()
        parsed = parse_idx(encode_idx(images), normalize=False)
        assert parsed.magic == IMAGES_MAGIC
        assert parsed.count == 2
        assert np.array_equal(parsed.data, images)

    def test_images_are_normalized(self) -> None:
        parsed = parse_idx(encode_idx(_two_images()))
        assert parsed.data.dtype == np.float32
        assert parsed.data[0, 5, 5] == 1.0
        assert parsed.data[1, 0, 14] == pytest.approx(128 / 255)

    def test_labels_stay_integers(self) -> None:
        labels = np.array([3, 1, 4], dtype=np.uint8)
        parsed = parse_idx(encode_idx(labels))
        assert parsed.data.tolist() == [3, 1, 4]

    def test_big_endian_floats(self) -> None:
        values = np.array([[1.5, -2.0]], dtype=np.float32)
        raw = encode_idx(values)
        assert raw[:4] == b"\x00\x00\x0d\x02"
        assert np.array_equal(parse_idx(raw).data, values)

    @pytest.mark.parametrize(
        "magic, offset",
        [
            (b"\x01\x00\x08\x03", 0),
            (b"\x00\x00\x07\x03", 2),
            (b"\x00\x00\x08\x00", 3),
        ],
    )
    def test_bad_magic_reports_offset(self, magic: bytes, offset: int) -> None:
        with pytest.raises(BadMagicError) as info:
            parse_idx(magic + b"\x00" * 16)
        assert info.value.offset == offset
        assert f"offset {offset}" in str(info.value)

    def test_truncated_payload(self) -> None:
        raw = encode_idx(_two_images())
        with pytest.raises(TruncatedPayloadError) as info:
            parse_idx(raw[:-10])
        assert info.value.offset == len(raw) - 10

    def test_truncated_header(self) -> None:
        with pytest.raises(TruncatedPayloadError):
            parse_idx(b"\x00\x00\x08\x03\x00\x00")
        with pytest.raises(TruncatedPayloadError):
            parse_idx(b"\x00\x00")

    def test_dimension_overflow(self) -> None:
        raw = b"\x00\x00\x0e\x04" + struct.pack(">4I", *([0xFFFFFFFF] * 4))
        with pytest.raises(DimensionOverflowError):
            parse_idx(raw)


class TestIdxFiles:
    """Test cases for IDX files on disk."""

    @pytest.mark.parametrize("name", ["images-idx3-ubyte", "images-idx3-ubyte.gz"])
    def test_file_roundtrip(self, tmp_path: Path, name: str) -> None:
        path = write_idx(tmp_path / name, _two_images())
        assert np.array_equal(load_idx(path, normalize=False).data, _two_images())

    def test_gzip_is_deterministic(self, tmp_path: Path) -> None:
        first = write_idx(tmp_path / "a.gz", _two_images()).read_bytes()
        second = write_idx(tmp_path / "b.gz", _two_images()).read_bytes()
        assert first == second

    def test_truncated_gzip_stream(self, tmp_path: Path) -> None:
        path = write_idx(tmp_path / "images.gz", _two_images())
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(IdxFormatError, match="gzip"):
            load_idx(path)

    def test_corrupt_gzip_header(self, tmp_path: Path) -> None:
        path = tmp_path / "images.gz"
        path.write_bytes(b"\x1f\x8b" + b"\x00" * 30)
        with pytest.raises(IdxFormatError, match="gzip"):
            load_idx(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(FileNotFoundError):
            load_idx(tmp_path / "missing")

    def test_load_mnist(self, mnist_dir: Path) -> None:
        images, labels = load_mnist(mnist_dir, train=True)
        assert images.shape == (48, 1, 28, 28)
        assert labels.shape == (48,)
        assert labels.dtype == np.int64
        assert 0.0 <= images.min() and images.max() <= 1.0
        test_images, _ = load_mnist(mnist_dir, train=False)
        assert test_images.shape == (16, 1, 28, 28)

    def test_load_mnist_checks_magic(self, tmp_path: Path) -> None:
        # Labels stored where the images belong.
        write_idx(tmp_path / "train-images-idx3-ubyte", np.zeros(3, dtype=np.uint8))
        write_idx(tmp_path / "train-labels-idx1-ubyte", np.zeros(3, dtype=np.uint8))
        with pytest.raises(BadMagicError):
            load_mnist(tmp_path)

    def test_unsupported_dtype(self) -> None:
        with pytest.raises(ValueError):
            encode_idx(np.zeros(3, dtype=np.complex64))
