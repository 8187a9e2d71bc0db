"""Binary PPM (P6) reading and writing.

Only 8-bit files with ``maxval`` 255 are accepted. Pixels load as RGB
``float32`` in ``[0, 1]`` (value / 255) with channel-first layout and save by
rounding ``value * 255``. Files are written with the canonical header
``P6\\n<width> <height>\\n255\\n``.
"""

from pathlib import Path

import numpy as np

from app.core.exceptions import DataFormatError
from app.core.logging import get_logger
from app.tensor.tensor import Array, Tensor

logger = get_logger(__name__)

MAGIC = b"P6"
MAXVAL = 255
WHITESPACE = b" \t\n\r\v\f"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return ``(token, start, end)`` of the next header token after ``pos``."""
    while pos < len(data):
        byte = data[pos : pos + 1]
        if byte in WHITESPACE:
            pos += 1
        elif byte == b"#":
            newline = data.find(b"\n", pos)
            pos = len(data) if newline < 0 else newline + 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos : pos + 1] not in WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, start, end = _next_token(data, pos)
    if not token:
        raise DataFormatError(f"PPM header ended before {what}", offset=start)
    if not token.isdigit():
        raise DataFormatError(f"PPM {what} is not a decimal number: {token!r}", offset=start)
    return int(token), end


def decode_ppm(data: bytes) -> Array:
    """Decode P6 bytes into a ``uint8`` array of shape ``(H, W, 3)``.

    Raises:
        DataFormatError: On a bad magic, malformed or unsupported header, or
            a truncated pixel payload, with the byte offset of the problem.
    """
    if data[:2] != MAGIC:
        raise DataFormatError(f"not a binary PPM: magic {data[:2]!r}", offset=0)
    width, pos = _header_int(data, 2, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width == 0 or height == 0:
        raise DataFormatError(f"PPM dimensions must be positive, got {width}x{height}", offset=2)
    if maxval != MAXVAL:
        raise DataFormatError(f"only maxval {MAXVAL} is supported, got {maxval}", offset=pos)
    if pos >= len(data) or data[pos : pos + 1] not in WHITESPACE:
        raise DataFormatError("expected one whitespace byte after maxval", offset=pos)
    pos += 1
    needed = width * height * 3
    available = len(data) - pos
    if available < needed:
        raise DataFormatError(
            f"truncated PPM payload: {width}x{height} needs {needed} bytes, found {available}",
            offset=len(data),
        )
    pixels = np.frombuffer(data, dtype=np.uint8, count=needed, offset=pos)
    return pixels.reshape(height, width, 3)


def encode_ppm(pixels: Array) -> bytes:
    """Encode a ``uint8`` ``(H, W, 3)`` array as canonical P6 bytes."""
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise DataFormatError(f"PPM pixels must be (H, W, 3), got {pixels.shape}")
    height, width = pixels.shape[:2]
    header = f"P6\n{width} {height}\n{MAXVAL}\n".encode("ascii")
    return header + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


def to_unit(pixels: Array) -> Array:
    """``uint8 (H, W, 3)`` to ``float32 (3, H, W)`` in ``[0, 1]``."""
    return np.ascontiguousarray(pixels.transpose(2, 0, 1), dtype=np.float32) / np.float32(MAXVAL)


def to_pixels(image: Array) -> Array:
    """``(3, H, W)`` values in ``[0, 1]`` to rounded ``uint8 (H, W, 3)``."""
    if image.ndim != 3 or image.shape[0] != 3:
        raise DataFormatError(f"image must be (3, H, W), got {image.shape}")
    scaled = np.rint(np.clip(image, 0.0, 1.0) * MAXVAL)
    return scaled.astype(np.uint8).transpose(1, 2, 0)


def load_ppm(path: Path) -> Tensor:
    """Load a P6 file as a ``[3, H, W]`` tensor in ``[0, 1]``.

    Raises:
        DataFormatError: If the file cannot be read or is malformed.
    """
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    try:
        pixels = decode_ppm(data)
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc.message}", offset=exc.offset) from exc
    return Tensor(to_unit(pixels))


def save_ppm(image: Tensor | Array, path: Path) -> Path:
    """Write a ``[3, H, W]`` image in ``[0, 1]`` as P6, quantized to 1/255.

    Raises:
        DataFormatError: If the image is not 3-channel or contains values
            outside ``[0, 1]``.
    """
    values = image.data if isinstance(image, Tensor) else np.asarray(image)
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise DataFormatError(
            f"image values must lie in [0, 1], got [{values.min()}, {values.max()}]"
        )
    payload = encode_ppm(to_pixels(values))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as exc:
        raise DataFormatError(f"cannot write {path}: {exc}") from exc
    return path


def list_ppm_files(directory: Path) -> list[Path]:
    """``.ppm`` files of a flat directory in lexicographic name order."""
    if not directory.is_dir():
        raise DataFormatError(f"{directory} is not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() == ".ppm" and p.is_file())
