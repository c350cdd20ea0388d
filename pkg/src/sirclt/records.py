"""Line-oriented result files and histogram export.

A run file is JSON Lines: a ``config`` record (carrying ``schema_version``
and a UTC timestamp), one ``trial`` record per trial in trial order, then
a ``summary`` record.  Floats are written with Python's shortest
round-trip ``repr``, so parsing and re-serialising a file reproduces it
byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from scipy.special import ndtr

__all__ = ["SCHEMA_VERSION", "RunRecord", "dumps_records", "histogram_rows", "write_histogram"]

SCHEMA_VERSION = 1


def _line(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _clean(obj):
    """Plain JSON types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class RunRecord:
    config: dict
    rows: list
    summary: dict
    timestamp: str = ""
    schema_version: int = SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_result(cls, result, timestamp: str | None = None, extra: dict | None = None):
        ts = timestamp or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        return cls(config=_clean(result.config.to_dict()), rows=_clean(result.records()),
                   summary=_clean(result.summary.to_dict()), timestamp=ts,
                   extra=_clean(extra or {}))

    def lines(self):
        head = {"record": "config", "schema_version": self.schema_version,
                "timestamp": self.timestamp, "config": self.config}
        if self.extra:
            head["extra"] = self.extra
        yield _line(head)
        for row in self.rows:
            yield _line({"record": "trial", **row})
        yield _line({"record": "summary", "summary": self.summary})

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    @classmethod
    def loads(cls, text: str) -> "RunRecord":
        objs = [json.loads(line) for line in text.splitlines() if line.strip()]
        if len(objs) < 2 or objs[0].get("record") != "config" or objs[-1].get("record") != "summary":
            raise ValueError("not a run file: expected config ... summary records")
        head = objs[0]
        if "schema_version" not in head:
            raise ValueError("missing schema_version")
        rows = []
        for o in objs[1:-1]:
            if o.get("record") != "trial":
                raise ValueError(f"unexpected record {o.get('record')!r}")
            rows.append({k: v for k, v in o.items() if k != "record"})
        if [r["trial"] for r in rows] != sorted(r["trial"] for r in rows):
            raise ValueError("trial records out of order")
        return cls(config=head["config"], rows=rows, summary=objs[-1]["summary"],
                   timestamp=head.get("timestamp", ""), schema_version=head["schema_version"],
                   extra=head.get("extra", {}))


def dumps_records(result) -> bytes:
    """Per-trial lines only (no timestamp), as bytes for exact comparison."""
    return "".join(_line({"record": "trial", **r}) + "\n"
                   for r in _clean(result.records())).encode()


def histogram_rows(values, bins: int = 50, mean: float | None = None, variance: float | None = None):
    """Bin edges, counts and (optionally) expected counts under N(mean, variance)."""
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins)
    expected = None
    if mean is not None and variance and variance > 0:
        sd = math.sqrt(variance)
        cdf = ndtr((edges - mean) / sd)
        expected = values.size * np.diff(cdf)
    rows = []
    for i in range(counts.size):
        row = [repr(float(edges[i])), repr(float(edges[i + 1])), str(int(counts[i]))]
        row.append(repr(float(expected[i])) if expected is not None else "")
        rows.append(row)
    return rows


def write_histogram(path, values, bins: int = 50, mean=None, variance=None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["left", "right", "count", "expected"])
    w.writerows(histogram_rows(values, bins, mean, variance))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
