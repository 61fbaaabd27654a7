"""Machine-readable output: iteration tables, JSON documents, checksums."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

REPORT_COLUMNS = ("k", "energy_gap", "err_norm", "factor", "theory_rate")


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    return obj


def write_table(rows, path, columns):
    """Write dict rows as CSV with the given header; floats use ``repr``."""
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    try:
        path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"{path}: cannot write report ({exc.strerror})") from exc
    return path


def write_json(doc, path):
    path = Path(path)
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"{path}: cannot write report ({exc.strerror})") from exc
    return path


def write_report(report, path, format="csv"):
    """Write an :class:`~porosplit.coupling.IterationReport` as CSV or JSON.

    The CSV holds one row per iterate with the columns of
    :data:`REPORT_COLUMNS`; undefined factors are written as ``nan``.
    """
    if format == "csv":
        return write_table(report.rows(), path, REPORT_COLUMNS)
    if format == "json":
        return write_json(report.to_dict(), path)
    raise ValueError(f"unknown report format {format!r}")


def read_report_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            {c: (int(r[c]) if c == "k" else float(r[c])) for c in REPORT_COLUMNS}
            for r in reader
        ]


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
