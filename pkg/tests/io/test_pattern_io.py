import msgpack
import numpy as np
import pytest

from pxrdsep.errors import CorruptPatternFile, EmptyInput, GridMismatch
from pxrdsep.io import read_pattern, write_pattern
from pxrdsep.io.common import pack_array, unpack_array
from pxrdsep.io.patterns import (
    PATTERN_MAGIC,
    PATTERN_VERSION,
    pattern_from_bytes,
    pattern_to_bytes,
    read_pattern_text,
    read_two_column,
    write_pattern_text,
)


@pytest.mark.parametrize("filename", ["pattern.pxp", "pattern.txt"])
def test_pattern_file_roundtrip(tmp_path, gaussian_pattern, filename):
    """Test that binary and text pattern files reproduce the pattern exactly"""
    path = tmp_path / filename
    write_pattern(gaussian_pattern, path)
    result = read_pattern(path)
    assert result == gaussian_pattern
    assert len(result) == len(gaussian_pattern)


def test_text_header_is_skipped(tmp_path, gaussian_pattern):
    path = tmp_path / "pattern.txt"
    write_pattern_text(gaussian_pattern, path, header="id=test\nslot=2")
    assert path.read_text().startswith("# id=test\n# slot=2\n")
    assert read_pattern_text(path) == gaussian_pattern


def test_nonuniform_text(tmp_path):
    path = tmp_path / "raw.txt"
    path.write_text("10.0 1.0\n10.1 2.0\n10.3 1.0\n")
    with pytest.raises(GridMismatch):
        read_pattern_text(path)
    angles, intensities = read_two_column(path)
    assert np.allclose(angles, [10.0, 10.1, 10.3])
    assert np.allclose(intensities, [1.0, 2.0, 1.0])


def test_empty_text(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("")
    with pytest.raises(EmptyInput):
        read_two_column(path)


@pytest.mark.parametrize(
    "data",
    [
        b"not a pattern",
        msgpack.packb(["OTHER", PATTERN_VERSION, 5.0, 0.02, 1, b"\x00" * 8]),
        msgpack.packb([PATTERN_MAGIC, PATTERN_VERSION + 1, 5.0, 0.02, 1, b"\x00" * 8]),
        msgpack.packb([PATTERN_MAGIC, PATTERN_VERSION, 5.0, 0.02, 2, b"\x00" * 8]),
    ],
)
def test_corrupt_pattern_bytes(data):
    """Test rejection of bad magic, version and payload length"""
    with pytest.raises(CorruptPatternFile):
        pattern_from_bytes(data)


def test_pattern_bytes_are_deterministic(gaussian_pattern):
    assert pattern_to_bytes(gaussian_pattern) == pattern_to_bytes(gaussian_pattern)


@pytest.mark.parametrize(
    "array",
    [
        np.linspace(0.0, 1.0, 7),
        np.arange(12, dtype=np.float32).reshape(3, 4),
        np.arange(5, dtype=np.int64),
    ],
)
def test_pack_array(array):
    """Test msgpack array encoding keeps dtype, shape and values"""
    packed = msgpack.unpackb(msgpack.packb(pack_array(array), use_bin_type=True))
    result = unpack_array(packed)
    assert result.shape == array.shape
    assert result.dtype == array.dtype
    assert np.array_equal(result, array)


def test_pack_array_rejects_complex():
    with pytest.raises(ValueError):
        pack_array(np.ones(3, dtype=complex))


def test_atomic_write_creates_directory(tmp_path, gaussian_pattern):
    path = tmp_path / "nested" / "stage" / "pattern.pxp"
    write_pattern(gaussian_pattern, path)
    assert read_pattern(path) == gaussian_pattern
    assert [p.name for p in path.parent.iterdir()] == ["pattern.pxp"]
