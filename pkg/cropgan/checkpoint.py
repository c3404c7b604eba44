"""Binary checkpoint format for trained networks.

Layout (all integers little-endian):

    magic     4 bytes  b"CGCK"
    version   u16
    role      u8       index into networks.ROLES
    epoch     u32
    count     u32      number of tensors
    manifest  per tensor: ndim u8, then ndim x u32 dims
    blob      float64 values of every tensor, row-major, in manifest order
    metadata  u32 byte length, then UTF-8 "key=value" lines; backslashes and
              newlines in values are written as two-character escapes

Tensors are the network parameters followed by its buffers (batch-norm
running statistics), in layer order.
"""

import json
import logging
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cropgan.networks import ROLES, Network, build_network
from shared.errors import FormatError, UsageError
from shared.version import CHECKPOINT_FORMAT_VERSION

logger = logging.getLogger("cropgan.checkpoint")

MAGIC = b"CGCK"
_HEADER = struct.Struct("<4sHBII")
_UNESCAPES = {"\\": "\\", "n": "\n"}
_ESCAPED = re.compile(r"\\(.?)", re.DOTALL)


@dataclass
class Checkpoint:
    """Decoded checkpoint contents."""

    role: str
    epoch: int
    arrays: list[np.ndarray]
    metadata: dict[str, str] = field(default_factory=dict)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """Serialize a checkpoint to bytes."""
    parts = [
        _HEADER.pack(
            MAGIC,
            CHECKPOINT_FORMAT_VERSION,
            ROLES.index(checkpoint.role),
            checkpoint.epoch,
            len(checkpoint.arrays),
        )
    ]
    for array in checkpoint.arrays:
        parts.append(struct.pack(f"<B{array.ndim}I", array.ndim, *array.shape))
    for array in checkpoint.arrays:
        parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    for key in checkpoint.metadata:
        _check_key(key)
    lines = "".join(
        f"{key}={_escape(value)}\n" for key, value in sorted(checkpoint.metadata.items())
    )
    encoded = lines.encode("utf-8")
    parts.append(struct.pack("<I", len(encoded)))
    parts.append(encoded)
    return b"".join(parts)


def decode_checkpoint(data: bytes, path: str = "<bytes>") -> Checkpoint:
    """
    Parse checkpoint bytes.

    Raises:
        FormatError: Bad magic, unknown version or role, or a truncated section
    """
    if len(data) < _HEADER.size:
        raise FormatError(path, len(data), "truncated header")
    magic, version, role_code, epoch, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(path, 0, f"bad magic {magic!r}")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise FormatError(path, 4, f"unsupported version {version}")
    if role_code >= len(ROLES):
        raise FormatError(path, 6, f"unknown role code {role_code}")

    offset = _HEADER.size
    shapes = []
    for _ in range(count):
        if offset + 1 > len(data):
            raise FormatError(path, offset, "truncated shape manifest")
        ndim = data[offset]
        offset += 1
        end = offset + 4 * ndim
        if end > len(data):
            raise FormatError(path, offset, "truncated shape manifest")
        shapes.append(struct.unpack_from(f"<{ndim}I", data, offset))
        offset = end

    arrays = []
    for shape in shapes:
        size = int(np.prod(shape)) if shape else 1
        end = offset + 8 * size
        if end > len(data):
            raise FormatError(path, offset, "parameter blob shorter than manifest")
        values = np.frombuffer(data, dtype="<f8", count=size, offset=offset)
        arrays.append(values.reshape(shape).copy())
        offset = end

    if offset + 4 > len(data):
        raise FormatError(path, offset, "missing metadata length")
    (length,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if offset + length != len(data):
        raise FormatError(path, offset, f"metadata length {length} does not match file size")
    try:
        text = data[offset:].decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(path, offset + e.start, "metadata is not UTF-8") from e

    lines = text.split("\n")
    if lines[-1] != "":
        raise FormatError(path, len(data), "metadata does not end with a newline")
    metadata = {}
    for line in lines[:-1]:
        key, sep, value = line.partition("=")
        if not sep or not key:
            raise FormatError(path, offset, f"metadata line without a key: {line!r}")
        try:
            metadata[key] = _unescape(value)
        except ValueError as e:
            raise FormatError(path, offset, f"metadata value for {key!r}: {e}") from e

    return Checkpoint(role=ROLES[role_code], epoch=epoch, arrays=arrays, metadata=metadata)


def _check_key(key: str) -> None:
    if not key or "=" in key or "\n" in key:
        raise UsageError(
            f"Checkpoint metadata key {key!r} must be non-empty without '=' or newlines"
        )


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\n", "\\n")


def _unescape(value: str) -> str:
    def replace(match: re.Match) -> str:
        if match.group(1) not in _UNESCAPES:
            raise ValueError(f"bad escape {match.group(0)!r}")
        return _UNESCAPES[match.group(1)]

    return _ESCAPED.sub(replace, value)


def rng_state(rng: np.random.Generator) -> str:
    """Bit-generator state as JSON text, suitable for checkpoint metadata."""
    return json.dumps(rng.bit_generator.state, sort_keys=True)


def restore_rng(state: str) -> np.random.Generator:
    """Inverse of rng_state()."""
    data = json.loads(state)
    bit_generator = getattr(np.random, data["bit_generator"])()
    bit_generator.state = data
    return np.random.Generator(bit_generator)


def checkpoint_of(network: Network, epoch: int = 0, metadata: dict | None = None) -> Checkpoint:
    """
    Snapshot ``network``; metadata values are stored as text.

    Raises:
        UsageError: A metadata key is empty or holds '=' or a newline
    """
    metadata = {str(k): str(v) for k, v in (metadata or {}).items()}
    for key in metadata:
        _check_key(key)
    return Checkpoint(
        role=network.role,
        epoch=epoch,
        arrays=network.state_arrays(),
        metadata=metadata,
    )


def save_checkpoint(
    network: Network,
    path: str | Path,
    epoch: int = 0,
    metadata: dict | None = None,
) -> Path:
    """
    Write ``network`` to ``path``.

    Args:
        network: Network to save
        path: Destination file; parent directories are created
        epoch: Epoch the parameters belong to
        metadata: Free-form key/value pairs (config hash, loss, rng state)

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(checkpoint_of(network, epoch, metadata)))
    logger.debug(f"Saved {network.role} checkpoint (epoch {epoch}) to {path}")
    return path


def read_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    return decode_checkpoint(path.read_bytes(), str(path))


def network_from_checkpoint(checkpoint: Checkpoint, path: str = "<bytes>") -> Network:
    network = build_network(checkpoint.role)
    expected = [tuple(a.shape) for a in network.state_arrays()]
    actual = [tuple(a.shape) for a in checkpoint.arrays]
    if expected != actual:
        raise FormatError(path, _HEADER.size, f"shape manifest does not match a {checkpoint.role}")
    network.load_state_arrays(checkpoint.arrays)
    network.epoch = checkpoint.epoch
    network.metadata = dict(checkpoint.metadata)
    return network


def load_checkpoint(path: str | Path) -> Network:
    """
    Rebuild a network from a checkpoint file.

    Raises:
        FormatError: The file is corrupt or its manifest does not fit the role
    """
    return network_from_checkpoint(read_checkpoint(path), str(path))
