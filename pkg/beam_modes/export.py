"""CSV helpers shared by the atlas, the two-mode exporter and the CLI."""

from __future__ import annotations

import csv
import io
from enum import Enum
from pathlib import Path
from typing import IO, Any, Iterable, Optional, Sequence, Union

Destination = Union[str, Path, IO[str]]


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats, empty for None, enum values lowercase."""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_optional_float(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def write_rows(header: Sequence[str], rows: Iterable[Sequence[Any]], destination: Destination) -> None:
    """Write a header and rows; ``destination`` is a path or an open text stream."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", newline="", encoding="utf-8") as handle:
            write_rows(header, rows, handle)
        return
    writer = csv.writer(destination, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value) for value in row])


def rows_to_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    write_rows(header, rows, buffer)
    return buffer.getvalue()
