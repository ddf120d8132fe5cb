"""Result tables with certificates, written as CSV or JSON lines.

Floats are printed with 17 significant digits so every binary64 value
round-trips exactly; nothing run-dependent (timestamps, timings, host
names) enters the output, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np


def fmt_float(x: float) -> str:
    """17 significant digits; ``nan``, ``inf`` and ``-inf`` spelled out.

    Examples
    --------
    >>> fmt_float(0.1)
    '0.10000000000000001'
    >>> fmt_float(8.0)
    '8'
    """
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def to_text(value) -> str:
    """Compact JSON text with every float at 17 significant digits.

    Non-finite floats become ``null`` so the output stays strict JSON.
    """
    if value is None or isinstance(value, (bool, np.bool_)):
        return json.dumps(None if value is None else bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(value) if math.isfinite(value) else "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{to_text(v)}" for k, v in value.items()) + "}"
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(to_text(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    if isinstance(value, str):
        return value
    return to_text(value)


@dataclass
class Certificate:
    name: str
    passed: bool
    value: object = None
    threshold: object = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "threshold": self.threshold, "detail": self.detail}


@dataclass
class ResultTable:
    """Rows under a fixed column schema plus the certificates of the run."""

    command: str
    columns: list
    rows: list = field(default_factory=list)
    certificates: list = field(default_factory=list)

    def add(self, **row):
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"columns {sorted(unknown)} not in the {self.command} schema")
        self.rows.append({c: row.get(c) for c in self.columns})

    def certify(self, name: str, passed: bool, value=None, threshold=None, detail: str = ""):
        self.certificates.append(Certificate(name, bool(passed), value, threshold, detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)

    def render(self, fmt: str, header: dict) -> str:
        if fmt == "json":
            lines = [to_text({"kind": "header", **header})]
            lines += [to_text({"kind": "row", **r}) for r in self.rows]
            lines += [to_text({"kind": "certificate", **c.to_dict()}) for c in self.certificates]
            lines.append(to_text({"kind": "summary", "passed": self.passed}))
            return "\n".join(lines) + "\n"
        if fmt != "csv":
            raise ValueError(f"unknown format {fmt!r}")
        buf = io.StringIO()
        for k, v in header.items():
            buf.write(f"# {k}: {to_text(v)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(r[c]) for c in self.columns])
        for c in self.certificates:
            buf.write(f"# certificate: {to_text(c.to_dict())}\n")
        buf.write(f"# passed: {to_text(self.passed)}\n")
        return buf.getvalue()
