"""Binary 8-bit PGM (P5) images and bilinear resizing."""
import contextlib
from pathlib import Path
from typing import BinaryIO, Tuple, Union

import numpy as np

from ..errors import DataError

PathOrFile = Union[str, Path, BinaryIO]


@contextlib.contextmanager
def _open(source: PathOrFile, mode="rb"):
    if hasattr(source, "read") or hasattr(source, "write"):
        yield source
    else:
        try:
            with open(source, mode) as f:
                yield f
        except FileNotFoundError:
            raise DataError(f"File {source} not found", code="missing_file", location=str(source))


def _header_tokens(raw: bytes, count: int, location: str) -> Tuple[list, int]:
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace() and raw[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise DataError("Malformed PGM header: truncated", code="pgm_header", location=location)
        tokens.append(raw[start:pos])
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(raw) or not raw[pos : pos + 1].isspace():
        raise DataError("Malformed PGM header: missing separator", code="pgm_header", location=location)
    return tokens, pos + 1


def read_pgm(source: PathOrFile) -> np.ndarray:
    """Reads a P5 image with maxval <= 255 and scales it to [0, 1]."""
    location = str(source) if not hasattr(source, "read") else "<stream>"
    with _open(source, "rb") as f:
        raw = f.read()
    tokens, offset = _header_tokens(raw, 4, location)
    if tokens[0] != b"P5":
        raise DataError(
            f"Malformed PGM header: magic {tokens[0]!r}, expecting b'P5'",
            code="pgm_header",
            location=location,
        )
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DataError("Malformed PGM header: non-numeric size", code="pgm_header", location=location)
    if width <= 0 or height <= 0 or not 0 < maxval <= 255:
        raise DataError(
            f"Malformed PGM header: {width}x{height}, maxval {maxval} (only 8-bit supported)",
            code="pgm_header",
            location=location,
        )
    raster = np.frombuffer(raw, dtype=np.uint8, count=-1, offset=offset)
    if raster.size < width * height:
        raise DataError("Truncated PGM raster", code="pgm_raster", location=location)
    pixels = raster[: width * height].reshape(height, width)
    return pixels.astype(np.float64) / maxval


def write_pgm(target: PathOrFile, image: np.ndarray):
    """Writes an image with values in [0, 1] as 8-bit P5."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DataError(f"PGM needs a 2-D image, got shape {image.shape}", code="pgm_shape")
    pixels = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    height, width = pixels.shape
    with _open(target, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def _axis(in_size: int, out_size: int):
    # pixel-center alignment, edge-clamped
    src = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    low = np.floor(src).astype(np.int64)
    high = np.minimum(low + 1, in_size - 1)
    return low, high, src - low


def bilinear_resize(image: np.ndarray, height: int, width: int) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.shape == (height, width):
        return image.copy()
    y0, y1, fy = _axis(image.shape[0], height)
    x0, x1, fx = _axis(image.shape[1], width)
    rows = image[y0] * (1.0 - fy)[:, None] + image[y1] * fy[:, None]
    return rows[:, x0] * (1.0 - fx)[None, :] + rows[:, x1] * fx[None, :]
