import csv
from typing import Any, Dict, Iterable, List, Sequence

from . import BaseWriter, format_value


class CSVWriter(BaseWriter):
    """Collects rows and writes them as CSV with the config echo on top.

    The echo goes first as ``# key=value`` lines (sorted by key), followed by
    the header row and the data rows.
    """

    def __init__(self, *, columns: Sequence[str], **kwargs):
        super().__init__(**kwargs)
        self.columns = list(columns)
        self._rows: List[List[str]] = []

    def write(self, rows: Iterable[Dict[str, Any]]):
        for row in rows:
            self._rows.append([format_value(row[c]) for c in self.columns])

    def finish(self):
        self.target.parent.mkdir(parents=True, exist_ok=True)
        with open(self.target, "w", newline="", encoding="utf-8") as f:
            for key in sorted(self.echo):
                f.write(f"# {key}={format_value(self.echo[key])}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.columns)
            writer.writerows(self._rows)


def read_csv(path) -> List[Dict[str, str]]:
    """Reads a CSV written by :class:`CSVWriter`, skipping the echo lines."""
    with open(path, encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))
