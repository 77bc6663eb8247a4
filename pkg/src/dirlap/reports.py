"""Report serialization: versioned JSON and RFC-4180 CSV, written atomically.

Reports never embed timestamps or machine identifiers, so a given resolved
experiment spec produces byte-identical files on every run.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from typing import Iterable, Sequence

SCHEMA_VERSION = "v1"


def report_schema_version() -> str:
    """Schema tag embedded in every JSON report."""
    return SCHEMA_VERSION


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-report-")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_report(path: str, payload: dict) -> None:
    """Write a schema-tagged JSON report (sorted keys, stable float repr)."""
    doc = {"schema": SCHEMA_VERSION}
    doc.update(payload)
    _atomic_write(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def read_json_report(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"report {path} carries schema {doc.get('schema')!r}, "
                         f"expected {SCHEMA_VERSION!r}")
    return doc


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _atomic_write(path, buf.getvalue())


def write_trajectory_csv(path: str, series: dict[str, tuple[list, list]]) -> None:
    """Plot-ready norm trajectories: columns (t, norm_kind, value)."""
    rows = []
    for kind, (times, values) in sorted(series.items()):
        for t, v in zip(times, values):
            rows.append((repr(float(t)), kind, repr(float(v))))
    write_csv(path, ("t", "norm_kind", "value"), rows)


def write_ball_csv(path: str, b) -> None:
    """Columnar ball dump: (vertex, distance, measure)."""
    rows = ((" ".join(str(c) for c in v), d, repr(m)) for v, d, m in b.rows())
    write_csv(path, ("vertex", "distance", "measure"), rows)


def write_oracle_diff(path: str, entries: list[dict], max_abs_diff: float) -> None:
    """Diff report for simulation-vs-dense-exponential comparisons."""
    write_json_report(path, {
        "kind": "oracle-diff",
        "max_abs_diff": max_abs_diff,
        "entries": entries,
    })
