"""CSV export and import for histories, predictions, metrics and embeddings."""

import csv
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from shared.errors import FormatError


def format_value(value) -> str:
    """Floats get 17 significant digits so they read back bit-identically."""
    if isinstance(value, float | np.floating):
        return f"{float(value):.17g}"
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(
    path: str | Path,
    header: Sequence[str] | None = None,
    required: Sequence[str] = (),
) -> list[dict[str, str]]:
    """
    Read a CSV written by write_csv.

    Raises:
        FormatError: The header differs from ``header`` when one is given, a ``required``
            column is missing, or the file is not UTF-8
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            fields = list(reader.fieldnames or [])
            if header is not None and fields != list(header):
                raise FormatError(str(path), 0, f"expected header {','.join(header)}")
            missing = [name for name in required if name not in fields]
            if missing:
                raise FormatError(str(path), 0, f"missing column {missing[0]!r}")
            return list(reader)
    except UnicodeDecodeError as e:
        raise FormatError(str(path), e.start, "file is not UTF-8 text") from e


def read_column(path: str | Path, name: str, kind=int) -> list:
    """
    One column of a CSV converted with ``kind``.

    Raises:
        FormatError: The column is missing or a cell does not convert
    """
    values = []
    for row_number, row in enumerate(read_csv(path, required=(name,)), start=2):
        try:
            values.append(kind(row[name]))
        except (TypeError, ValueError) as e:
            raise FormatError(str(path), 0, f"line {row_number}: bad {name} {row[name]!r}") from e
    return values
