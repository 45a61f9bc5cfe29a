"""CSV and JSON readers and writers for cohorts, matrices and reports."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .chain import TransitionMatrix
from .core import Cohort, VisitRecord
from .errors import DataError, EmptyCohort, InvalidEdss, SchemaError

VISIT_HEADER = ["subject_id", "month", "edss"]


def read_visits_csv(path) -> list[VisitRecord]:
    """Parse a ``subject_id,month,edss`` file; errors name the offending line."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyCohort(f"{path}: empty file")
        if [h.strip() for h in header] != VISIT_HEADER:
            raise SchemaError(f"{path} line 1: header must be {','.join(VISIT_HEADER)}, got {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise SchemaError(f"{path} line {line}: expected 3 fields, got {len(row)}")
            sid, month, edss = (c.strip() for c in row)
            if not sid:
                raise SchemaError(f"{path} line {line}: empty subject_id")
            try:
                m = int(month)
            except ValueError:
                raise SchemaError(f"{path} line {line}: month {month!r} is not an integer") from None
            try:
                records.append(VisitRecord(sid, m, edss))
            except InvalidEdss as exc:
                raise type(exc)(f"{path} line {line}: {exc}") from None
    if not records:
        raise EmptyCohort(f"{path}: no visit records")
    return records


def write_cohort_csv(cohort: Cohort, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VISIT_HEADER)
        months = cohort.months
        for sid, row in zip(cohort.ids, cohort.edss):
            for m, v in zip(months, row):
                if v == v:
                    w.writerow([sid, int(m), f"{v:.1f}"])


def write_matrix_csv(m: TransitionMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in m.entries:
            fh.write(",".join(f"{x:.12g}" for x in row) + "\n")


def read_matrix_csv(path, from_month: int = 0, to_month: int = 3) -> TransitionMatrix:
    try:
        entries = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return TransitionMatrix(entries, from_month, to_month)


def matrix_to_dict(m: TransitionMatrix) -> dict:
    return {
        "from_month": m.from_month,
        "to_month": m.to_month,
        "kind": m.kind,
        "entries": m.entries.tolist(),
        "counts": None if m.counts is None else m.counts.astype(int).tolist(),
        "zero_rows": [i for i, z in enumerate(m.zero_rows) if z],
        "sources": [list(s) for s in m.sources],
    }


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def write_rows_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def fmt(x: float) -> str:
    """Float formatting used in all CSV outputs."""
    if x != x:
        return "nan"
    return f"{x:.12g}"


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
