"""Tabular report files: CSV (default) or JSON, with a small key/value preamble.

CSV layout::

    # key=value          (zero or more metadata lines)
    col_a,col_b,...      (header)
    ...                  (rows)

Floats are written with 12 significant digits so repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union

FLOAT_FMT = "%.12g"

Value = Union[int, float, str, bool, None]


@dataclass
class Table:
    columns: List[str]
    rows: List[List[Value]] = field(default_factory=list)
    meta: Dict[str, Value] = field(default_factory=dict)

    def add(self, *values: Value) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(list(values))

    def column(self, name: str) -> List[Value]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def format_value(v: Value) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return FLOAT_FMT % v
    return str(v)


def parse_value(text: str) -> Value:
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _json_value(v: Value) -> Any:
    if isinstance(v, float) and not isinstance(v, bool):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(FLOAT_FMT % v)
    return v


def dumps(table: Table, fmt: str = "csv") -> str:
    if fmt == "json":
        doc = {"meta": {k: _json_value(v) for k, v in table.meta.items()},
               "columns": table.columns,
               "rows": [[_json_value(v) for v in row] for row in table.rows]}
        return json.dumps(doc, indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    for k, v in table.meta.items():
        buf.write(f"# {k}={format_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def loads(text: str, fmt: str = "csv") -> Table:
    if fmt == "json":
        doc = json.loads(text)
        fix = lambda v: float(v) if v in ("inf", "-inf") else v
        return Table(list(doc["columns"]), [[fix(v) for v in r] for r in doc["rows"]],
                     {k: fix(v) for k, v in doc["meta"].items()})
    lines = text.splitlines()
    meta = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, val = lines[i][1:].strip().partition("=")
        meta[key] = parse_value(val)
        i += 1
    reader = csv.reader(lines[i:])
    header = next(reader, None)
    if header is None:
        raise ValueError("missing header row")
    rows = [[parse_value(c) for c in r] for r in reader]
    return Table(header, rows, meta)


def emit_report(table: Table, path: Union[str, Path, None], fmt: str = "csv") -> str:
    """Write ``table`` to ``path`` (or return the text when ``path`` is None)."""
    text = dumps(table, fmt)
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def read_report(path: Union[str, Path], fmt: str = "csv") -> Table:
    return loads(Path(path).read_text(), fmt)
