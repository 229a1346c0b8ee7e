"""Experiment reports and their CSV / JSON emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ClockError

UNITS = {
    "hbar": 1,
    "time": "units of the chosen tau",
    "energy": "angular frequency, 1/time",
}


class IoFailure(ClockError):
    category = "IoFailure"


@dataclass
class Verdict:
    name: str
    passed: bool
    value: float
    tolerance: float
    relation: str
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "tolerance": self.tolerance,
            "relation": self.relation,
            "note": self.note,
        }


def below(name: str, value: float, tol: float, note: str = "") -> Verdict:
    return Verdict(name, bool(value < tol), float(value), float(tol), "<", note)


def at_least(name: str, value: float, tol: float, note: str = "") -> Verdict:
    return Verdict(name, bool(value >= tol), float(value), float(tol), ">=", note)


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    results: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    series: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    wall_time: float | None = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def as_dict(self) -> dict:
        # wall time is deliberately left out so equal inputs give equal bytes
        return {
            "experiment": self.experiment,
            "config": self.config,
            "units": UNITS,
            "results": self.results,
            "columns": self.columns,
            "series": self.series,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "passed": self.passed,
        }


def _float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode({"im": obj.imag, "re": obj.real}, indent, level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(report: ExperimentReport) -> str:
    """Sorted keys, 17 significant digits per float, trailing newline."""
    return _encode(report.as_dict(), 2, 0) + "\n"


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return _float(float(v)).replace("null", "")
    if isinstance(v, (complex, np.complexfloating)):
        return f"{_float(v.real)}{'+' if v.imag >= 0 else '-'}{_float(abs(v.imag))}j"
    return "" if v is None else str(v)


def to_csv(report: ExperimentReport) -> str:
    """One row per series point under a header row; RFC 4180 quoting and CRLF."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    cols = list(report.columns)
    w.writerow(cols)
    for row in report.series:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def emit(report: ExperimentReport, fmt: str, path: str | os.PathLike) -> str:
    """Write ``report`` atomically as ``csv`` or ``json``; returns the path."""
    if fmt == "json":
        text = to_json(report)
    elif fmt == "csv":
        text = to_csv(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".report-", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"could not write {path}: {exc}") from exc
    return path
