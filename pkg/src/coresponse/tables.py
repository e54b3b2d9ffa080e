"""Plain delimited-table reading and writing.

All file formats in this package are simple delimited text: one mandatory
header row, no quoting, decimal point '.'.  The delimiter is auto-detected
among comma and tab (tab wins when the header contains one).  Numeric output
uses 12 significant digits, which round-trips any decimal input of up to 12
significant digits bit-exactly through a float64.
"""

from pathlib import Path

from .errors import ParseError, ValidationError


def fmt(x) -> str:
    """Format a number with 12 significant digits."""
    return format(float(x), ".12g")


def sniff_delimiter(first_line: str) -> str:
    return "\t" if "\t" in first_line else ","


def read_table(path) -> tuple[list[str], list[list[str]], str]:
    """Read a delimited table into (header, rows, delimiter).

    Raises:
        ParseError: empty file or ragged row (reported with its 1-based
            line number).
    """
    text = Path(path).read_text()
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    lines = [ln for ln in lines if ln != ""]
    if not lines:
        raise ParseError(f"{path}: file is empty")
    delim = sniff_delimiter(lines[0])
    header = lines[0].split(delim)
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(delim)
        if len(cells) != len(header):
            raise ParseError(
                f"{path}: row {i} has {len(cells)} cells, expected {len(header)}"
            )
        rows.append(cells)
    return header, rows, delim


def parse_cell(cell: str, path, row: int, col: int) -> float:
    """Parse one numeric cell, reporting 1-based coordinates on failure."""
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(
            f"{path}: non-numeric cell {cell!r} at row {row}, column {col}"
        ) from None
    return value


def write_table(path, header: list[str], rows, delimiter: str = ",") -> None:
    """Write a table of pre-formatted string cells."""
    for name in header:
        _check_label(name, delimiter)
    out = [delimiter.join(header)]
    for cells in rows:
        out.append(delimiter.join(cells))
    Path(path).write_text("\n".join(out) + "\n")


def _check_label(label: str, delimiter: str) -> None:
    if delimiter in label or "\n" in label or "\r" in label:
        raise ValidationError(f"label {label!r} contains the delimiter or a newline")
