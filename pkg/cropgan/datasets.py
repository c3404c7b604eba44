"""Labeled sample collections and their binary file format.

Dataset file layout (little-endian):

    magic      4 bytes  b"CGTS"
    version    u16
    count      u32
    timesteps  u16      always 9
    bands      u16      always 6
    labeled    u8       1 if a label section follows the samples
    samples    count x 9 x 6 float64, row-major
    labels     count x u8 (only when labeled)
    coords     count x (row u32, col u32), optional; present iff bytes remain
"""

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from shared.errors import FormatError, UsageError
from shared.version import DATASET_FORMAT_VERSION

TIMESTEPS = 9
BANDS = 6
SAMPLE_SHAPE = (TIMESTEPS, BANDS)
BAND_NAMES = ("B2", "B3", "B4", "B8", "B11", "B12")
RED = BAND_NAMES.index("B4")
NIR = BAND_NAMES.index("B8")

LABEL_OTHER = 0
LABEL_CORN = 1

MAGIC = b"CGTS"
_HEADER = struct.Struct("<4sHIHHB")


@dataclass
class LabeledDataset:
    """Samples of one domain: (n, 9, 6) reflectances in [0, 1], optional labels and pixel coords."""

    samples: np.ndarray
    labels: np.ndarray | None = None
    domain: str = ""
    coords: np.ndarray | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 3 or self.samples.shape[1:] != SAMPLE_SHAPE:
            raise UsageError(
                f"Samples must have shape (n, 9, 6), got {self.samples.shape}",
                details={"shape": list(self.samples.shape)},
            )
        if not np.all(np.isfinite(self.samples)):
            raise UsageError("Samples contain NaN or infinite values")
        if self.samples.size and (self.samples.min() < 0.0 or self.samples.max() > 1.0):
            raise UsageError("Sample reflectances must lie in [0, 1]")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.uint8)
            if self.labels.shape != (len(self.samples),):
                raise UsageError(
                    f"Expected {len(self.samples)} labels, got {self.labels.shape}",
                )
            if np.any(self.labels > 1):
                raise UsageError("Labels must be 0 (other) or 1 (corn)")
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=np.uint32)
            if self.coords.shape != (len(self.samples), 2):
                raise UsageError(f"Expected ({len(self.samples)}, 2) coords, got {self.coords.shape}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def require_labels(self, purpose: str) -> np.ndarray:
        if self.labels is None:
            raise UsageError(
                f"{purpose} needs a labeled dataset, but '{self.domain or 'dataset'}' has no labels",
                recovery_hint="Use a source-domain dataset produced with labels.",
            )
        return self.labels

    def subset(self, indices) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            samples=self.samples[indices],
            labels=None if self.labels is None else self.labels[indices],
            domain=self.domain,
            coords=None if self.coords is None else self.coords[indices],
        )

    def with_samples(self, samples: np.ndarray, domain: str | None = None) -> "LabeledDataset":
        """Same labels and coords, new sample values."""
        return replace(self, samples=samples, domain=self.domain if domain is None else domain)

    def unlabeled(self) -> "LabeledDataset":
        return replace(self, labels=None)

    def network_input(self) -> np.ndarray:
        return self.samples[..., np.newaxis]

    def flat(self) -> np.ndarray:
        return self.samples.reshape(len(self), -1)


def encode_dataset(dataset: LabeledDataset) -> bytes:
    parts = [
        _HEADER.pack(
            MAGIC,
            DATASET_FORMAT_VERSION,
            len(dataset),
            TIMESTEPS,
            BANDS,
            1 if dataset.has_labels else 0,
        ),
        np.ascontiguousarray(dataset.samples, dtype="<f8").tobytes(),
    ]
    if dataset.has_labels:
        parts.append(dataset.labels.astype(np.uint8).tobytes())
    if dataset.coords is not None:
        parts.append(np.ascontiguousarray(dataset.coords, dtype="<u4").tobytes())
    return b"".join(parts)


def decode_dataset(data: bytes, path: str = "<bytes>", domain: str = "") -> LabeledDataset:
    """
    Parse dataset bytes.

    Raises:
        FormatError: Bad header, wrong sample geometry or truncated sections
    """
    if len(data) < _HEADER.size:
        raise FormatError(path, len(data), "truncated header")
    magic, version, count, timesteps, bands, labeled = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(path, 0, f"bad magic {magic!r}")
    if version != DATASET_FORMAT_VERSION:
        raise FormatError(path, 4, f"unsupported version {version}")
    if (timesteps, bands) != SAMPLE_SHAPE:
        raise FormatError(path, 10, f"expected 9x6 samples, got {timesteps}x{bands}")
    if labeled not in (0, 1):
        raise FormatError(path, 14, f"label flag must be 0 or 1, got {labeled}")

    offset = _HEADER.size
    n_values = count * TIMESTEPS * BANDS
    if offset + 8 * n_values > len(data):
        raise FormatError(path, offset, "sample section shorter than header count")
    samples = np.frombuffer(data, dtype="<f8", count=n_values, offset=offset)
    samples = samples.reshape(count, TIMESTEPS, BANDS).copy()
    offset += 8 * n_values

    labels = None
    if labeled:
        if offset + count > len(data):
            raise FormatError(path, offset, "label section shorter than header count")
        labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset).copy()
        offset += count

    coords = None
    remaining = len(data) - offset
    if remaining == 8 * count and count > 0:
        coords = np.frombuffer(data, dtype="<u4", count=2 * count, offset=offset)
        coords = coords.reshape(count, 2).copy()
    elif remaining != 0:
        raise FormatError(path, offset, f"{remaining} trailing bytes do not form a coordinate table")

    try:
        return LabeledDataset(samples=samples, labels=labels, domain=domain, coords=coords)
    except UsageError as e:
        raise FormatError(path, _HEADER.size, e.message) from e


def write_dataset(dataset: LabeledDataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_dataset(dataset))
    return path


def read_dataset(path: str | Path, domain: str | None = None) -> LabeledDataset:
    """Read a dataset file; the domain tag defaults to the file stem."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"Dataset file not found: {path}")
    return decode_dataset(path.read_bytes(), str(path), domain if domain is not None else path.stem)
