"""CSV, matrix and image output helpers."""

import csv
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np


def ensure_directory(path: Path) -> None:
    """
    Ensure a directory exists, creating it if necessary.

    Args:
        path: Path to the directory
    """
    path.mkdir(parents=True, exist_ok=True)


def format_csv_value(value: Any) -> str:
    """Render a value for CSV output; floats use repr so rows round-trip exactly."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class CsvWriter:
    """
    Serialized CSV writer.

    All rows go through one lock so worker threads can report results
    while a single file handle owns the output.
    """

    def __init__(self, path: Path, columns: Sequence[str]):
        self.path = path
        self.columns = list(columns)
        self._lock = threading.Lock()
        ensure_directory(path.parent)
        with open(self.path, 'w', encoding='utf-8', newline='') as f:
            csv.writer(f, lineterminator='\n').writerow(self.columns)

    def write_row(self, row: Dict[str, Any]) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"Unknown CSV columns for {self.path.name}: {', '.join(sorted(unknown))}")
        values = [format_csv_value(row.get(column)) for column in self.columns]
        with self._lock:
            with open(self.path, 'a', encoding='utf-8', newline='') as f:
                csv.writer(f, lineterminator='\n').writerow(values)

    def write_rows(self, rows: Iterable[Dict[str, Any]]) -> None:
        for row in rows:
            self.write_row(row)


def append_csv_row(path: Path, columns: Sequence[str], row: Dict[str, Any]) -> None:
    """Append one row, writing the header first when the file does not exist yet."""
    ensure_directory(path.parent)
    new_file = not path.exists()
    with open(path, 'a', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        if new_file:
            writer.writerow(list(columns))
        writer.writerow([format_csv_value(row.get(column)) for column in columns])


def read_csv_rows(path: Path) -> List[Dict[str, str]]:
    """Read a CSV file into a list of column -> string dictionaries."""
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return list(csv.DictReader(f))


def write_matrix_csv(matrix: np.ndarray, output_path: Path) -> None:
    """Write a 2-D array as a headerless CSV of repr-formatted floats."""
    ensure_directory(output_path.parent)
    with open(output_path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        for row in np.asarray(matrix, dtype=np.float64):
            writer.writerow([repr(float(v)) for v in row])


def write_pgm(matrix: np.ndarray, output_path: Path, maxval: int = 255, comment: Optional[str] = None) -> None:
    """
    Write values in [0, 1] as a plain (P2, ASCII) greyscale PGM image.

    Args:
        matrix: 2-D array; values are clipped to [0, 1] and scaled to maxval
        output_path: Path to output file
        maxval: Maximum grey level
        comment: Optional comment line stored in the header
    """
    ensure_directory(output_path.parent)
    grey = np.rint(np.clip(np.asarray(matrix, dtype=np.float64), 0.0, 1.0) * maxval).astype(int)
    rows, cols = grey.shape
    lines = ["P2"]
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"{cols} {rows}")
    lines.append(str(maxval))
    for row in grey:
        lines.append(" ".join(str(v) for v in row))
    output_path.write_text("\n".join(lines) + "\n", encoding="ascii")
