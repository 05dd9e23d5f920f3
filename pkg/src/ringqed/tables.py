"""Plot-ready result tables with exact reproduction metadata.

CSV: a ``#``-prefixed meta block (one ``key: json`` line each, sorted),
then a header row and the data in long format, UTF-8 with LF endings.
JSON: ``{"meta": {...}, "columns": {name: [values]}}``.  Floats are written
in scientific notation with 12 significant digits in both formats, and
files are written atomically (temp file + rename).  Re-running a config on
one platform reproduces the files byte for byte: metadata contains no
timestamps and every solver in the chain is deterministic.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


def format_number(x) -> str:
    """12 significant digits, scientific; integers stay integral."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    xf = float(x)
    if np.isnan(xf):
        return "nan"
    if np.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    return f"{xf:.11e}"


@dataclass
class SweepTable:
    """Named equal-length columns plus the fully resolved configuration."""

    columns: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {name: len(vals) for name, vals in self.columns.items()}
        if len(set(lengths.values())) > 1:
            raise DimensionError(f"ragged columns: {lengths}")

    @property
    def nrows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def row(self, i: int) -> dict:
        return {name: vals[i] for name, vals in self.columns.items()}

    # -- output ------------------------------------------------------------

    def _meta_lines(self):
        for key in sorted(self.meta):
            yield f"# {key}: {json.dumps(self.meta[key], sort_keys=True)}"

    def to_csv(self) -> str:
        lines = list(self._meta_lines())
        names = list(self.columns)
        lines.append(",".join(names))
        for i in range(self.nrows):
            lines.append(",".join(format_number(self.columns[n][i]) for n in names))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        parts = ['{"meta": ']
        parts.append(json.dumps(self.meta, sort_keys=True))
        parts.append(', "columns": {')
        first = True
        for name, vals in self.columns.items():
            if not first:
                parts.append(", ")
            first = False
            body = ", ".join(format_number(v) for v in vals)
            parts.append(f"{json.dumps(name)}: [{body}]")
        parts.append("}}")
        return "".join(parts) + "\n"

    def write(self, path: str, fmt: str = "csv") -> str:
        if fmt not in ("csv", "json"):
            raise DimensionError(f"unknown output format {fmt!r}")
        text = self.to_csv() if fmt == "csv" else self.to_json()
        directory = os.path.dirname(os.path.abspath(path)) or "."
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ringqed-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path


def read_json_table(path: str) -> SweepTable:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return SweepTable(columns=obj["columns"], meta=obj["meta"])
