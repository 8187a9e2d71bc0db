"""Unit tests for binary PPM reading and writing."""

from pathlib import Path

import numpy as np
import pytest

from app.core.exceptions import DataFormatError
from app.data.ppm import decode_ppm, encode_ppm, list_ppm_files, load_ppm, save_ppm
from app.tensor.tensor import Tensor


def _write(path: Path, data: bytes) -> Path:
    path.write_bytes(data)
    return path


def test_all_black_file_loads_as_zeros(tmp_path: Path) -> None:
    """Test a 2x2 black P6 file becomes a zero [3, 2, 2] tensor."""
    path = _write(tmp_path / "black.ppm", b"P6\n2 2\n255\n" + bytes(12))

    image = load_ppm(path)

    assert image.shape == (3, 2, 2)
    np.testing.assert_array_equal(image.data, np.zeros((3, 2, 2)))


def test_pixel_value_is_normalized_by_255(tmp_path: Path) -> None:
    """Test 128 maps to 128/255 and channel order stays RGB."""
    path = _write(tmp_path / "one.ppm", b"P6 1 1 255\n" + bytes([128, 0, 255]))

    image = load_ppm(path)

    assert image.data[0, 0, 0] == pytest.approx(0.50196, abs=1e-5)
    assert image.data[1, 0, 0] == 0.0
    assert image.data[2, 0, 0] == 1.0


def test_header_comments_are_skipped() -> None:
    """Test '#' comments between header fields are ignored."""
    data = b"P6\n# made by hand\n3 # width\n1\n# max\n255\n" + bytes(range(9))

    pixels = decode_ppm(data)

    assert pixels.shape == (1, 3, 3)
    assert pixels[0, 2].tolist() == [6, 7, 8]


def test_save_of_load_is_byte_identical(tmp_path: Path) -> None:
    """Test a canonical P6 file survives load then save unchanged."""
    rng = np.random.default_rng(0)
    original = encode_ppm(rng.integers(0, 256, (5, 7, 3), dtype=np.uint8))
    source = _write(tmp_path / "src.ppm", original)

    copy = save_ppm(load_ppm(source), tmp_path / "copy.ppm")

    assert copy.read_bytes() == original


def test_save_of_load_canonicalizes_commented_header(tmp_path: Path) -> None:
    """Test a commented header is rewritten canonically with the pixels kept byte for byte."""
    payload = bytes(range(24))
    source = _write(tmp_path / "src.ppm", b"P6 # scanner\n4\t2\n# depth\n255\n" + payload)

    copy = save_ppm(load_ppm(source), tmp_path / "copy.ppm")

    assert copy.read_bytes() == b"P6\n4 2\n255\n" + payload


def test_save_then_load_within_quantization(tmp_path: Path) -> None:
    """Test arbitrary [0, 1] values come back within 1/255."""
    values = np.random.default_rng(1).uniform(0, 1, (3, 4, 6))

    loaded = load_ppm(save_ppm(Tensor(values), tmp_path / "q.ppm"))

    assert np.max(np.abs(loaded.data - values)) <= 0.5 / 255 + 1e-6


@pytest.mark.parametrize(
    ("data", "message", "offset"),
    [
        (b"P3\n1 1\n255\n0 0 0\n", "not a binary PPM", 0),
        (b"P6\n1 x\n255\n", "height is not a decimal", 5),
        (b"P6\n1 1\n65535\n" + bytes(6), "only maxval 255", 12),
        (b"P6\n2 2\n255\n" + bytes(5), "truncated PPM payload", 16),
        (b"P6\n2", "ended before height", 4),
    ],
)
def test_malformed_files_report_byte_offset(data: bytes, message: str, offset: int) -> None:
    """Test each malformation is rejected with its byte offset."""
    with pytest.raises(DataFormatError, match=message) as excinfo:
        decode_ppm(data)

    assert excinfo.value.offset == offset
    assert f"byte offset {offset}" in str(excinfo.value)


def test_load_names_the_file(tmp_path: Path) -> None:
    """Test load errors carry the path and offset."""
    path = _write(tmp_path / "bad.ppm", b"P6\n1 1\n255\n" + bytes(2))

    with pytest.raises(DataFormatError, match="bad.ppm") as excinfo:
        load_ppm(path)

    assert excinfo.value.offset == 13


def test_save_rejects_out_of_range_values(tmp_path: Path) -> None:
    """Test values outside [0, 1] are refused."""
    with pytest.raises(DataFormatError, match=r"\[0, 1\]"):
        save_ppm(np.full((3, 2, 2), 1.5), tmp_path / "x.ppm")


def test_list_ppm_files_is_lexicographic(tmp_path: Path) -> None:
    """Test directory listing order and filtering."""
    for name in ["b.ppm", "a.ppm", "c.txt", "10.ppm"]:
        (tmp_path / name).write_bytes(b"")

    assert [p.name for p in list_ppm_files(tmp_path)] == ["10.ppm", "a.ppm", "b.ppm"]
