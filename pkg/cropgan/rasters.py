"""Binary PGM (P5) masks and PPM (P6) color images with 8-bit samples."""

import re
from pathlib import Path

import numpy as np

from shared.errors import FormatError, UsageError

_HEADER = re.compile(rb"(P[56])(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)\s")


def _encode(magic: str, pixels: np.ndarray) -> bytes:
    height, width = pixels.shape[:2]
    header = f"{magic}\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


def _decode(data: bytes, path: str, magic: str, channels: int) -> np.ndarray:
    match = _HEADER.match(data)
    if match is None:
        raise FormatError(path, 0, f"not a binary {magic} image")
    if match.group(1).decode() != magic:
        raise FormatError(path, 0, f"expected {magic}, found {match.group(1).decode()}")
    width, height, max_value = (int(match.group(i)) for i in (2, 3, 4))
    if max_value != 255:
        raise FormatError(path, match.start(4), f"only 8-bit images are supported, maxval {max_value}")
    offset = match.end()
    expected = width * height * channels
    if len(data) - offset != expected:
        raise FormatError(path, offset, f"expected {expected} pixel bytes, found {len(data) - offset}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=offset).copy()
    return pixels.reshape((height, width, channels) if channels > 1 else (height, width))


def write_pgm(path: str | Path, mask: np.ndarray) -> Path:
    """Write a 2-D array; boolean masks are stored as 0/255."""
    mask = np.asarray(mask)
    if mask.dtype == bool:
        mask = mask.astype(np.uint8) * 255
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_encode("P5", mask))
    return path


def read_pgm(path: str | Path) -> np.ndarray:
    path = Path(path)
    return _decode(path.read_bytes(), str(path), "P5", 1)


def read_mask(path: str | Path) -> np.ndarray:
    """Read a PGM as booleans: any non-zero gray value is set."""
    return read_pgm(path) > 0


def write_ppm(path: str | Path, image: np.ndarray) -> Path:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise UsageError(f"PPM images must be (height, width, 3), got {image.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_encode("P6", image))
    return path


def read_ppm(path: str | Path) -> np.ndarray:
    path = Path(path)
    return _decode(path.read_bytes(), str(path), "P6", 3)
