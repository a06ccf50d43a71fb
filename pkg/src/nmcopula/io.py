"""CSV and JSON output of fits, samples and curves.

Every float is printed with 10 significant digits.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from nmcopula.exceptions import DataError

__all__ = [
    "fmt",
    "RESULT_COLUMNS",
    "result_row",
    "write_results",
    "read_results_csv",
    "write_columns",
    "read_columns",
]

RESULT_COLUMNS = (
    "rank",
    "family",
    "transform",
    "a",
    "c",
    "theta",
    "nu",
    "psi1",
    "loglik",
    "k",
    "n",
    "aic",
    "bic",
    "converged",
    "winner",
    "error",
)


def fmt(x):
    """Format a number with 10 significant digits; None becomes empty."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.10g}"


def _round(x):
    return None if x is None else float(fmt(x)) if np.isfinite(x) else None


def result_row(r, rank=None):
    e = r.estimates
    return {
        "rank": rank,
        "family": r.family.value,
        "transform": "" if r.transform is None else r.transform.value,
        "a": e.get("a"),
        "c": e.get("c"),
        "theta": e.get("theta"),
        "nu": e.get("nu"),
        "psi1": e.get("psi1"),
        "loglik": r.loglik,
        "k": r.k,
        "n": r.n,
        "aic": r.aic,
        "bic": r.bic,
        "converged": r.converged,
        "winner": r.winner,
        "error": r.error or "",
    }


def _json_row(row):
    out = {}
    for k, v in row.items():
        if isinstance(v, (bool, np.bool_, str)) or v is None:
            out[k] = v
        elif isinstance(v, (int, np.integer)):
            out[k] = int(v)
        else:
            out[k] = _round(v)
    return out


def write_results(results, path, ranked=True, extra=None):
    """Write fit results as CSV or JSON, chosen by the file extension.

    Parameters
    ----------
    results : iterable of FitResult
    path : str or Path
    ranked : bool
        Number rows from 1 in the given order.
    extra : dict, optional
        Additional top-level JSON fields.
    """
    path = Path(path)
    rows = [result_row(r, i + 1 if ranked else None) for i, r in enumerate(results)]
    if path.suffix.lower() == ".json":
        payload = {"results": [_json_row(row) for row in rows]}
        for row, r in zip(payload["results"], results):
            if r.model is not None:
                row["model"] = r.model.to_dict() if hasattr(r.model, "to_dict") else r.model.as_dict()
        if extra:
            payload.update(extra)
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RESULT_COLUMNS)
            for row in rows:
                w.writerow([fmt(row[c]) if not isinstance(row[c], str) else row[c] for c in RESULT_COLUMNS])


def read_results_csv(path):
    """Read a table written by :func:`write_results` into dictionaries."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RESULT_COLUMNS:
            raise DataError("not a results table")
        for rec in reader:
            row = {}
            for k, v in rec.items():
                if k in ("family", "transform", "error"):
                    row[k] = v
                elif k in ("converged", "winner"):
                    row[k] = v == "true"
                elif k in ("rank", "k", "n"):
                    row[k] = int(v) if v else None
                else:
                    row[k] = float(v) if v else None
            out.append(row)
    return out


def write_columns(path, columns, names):
    """Write equal-length numeric columns as CSV (or JSON by extension)."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    if path is None or str(path) == "-":
        import sys

        _write_csv(sys.stdout, cols, names)
        return
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps({n: [_round(x) for x in c] for n, c in zip(names, cols)}) + "\n")
        return
    with open(path, "w", newline="") as fh:
        _write_csv(fh, cols, names)


def _write_csv(fh, cols, names):
    w = csv.writer(fh)
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([fmt(x) for x in row])


def read_columns(path, names=None):
    """Read numeric CSV columns; returns ``(names, 2-D array)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = []
        for row in reader:
            if row:
                try:
                    data.append([float(x) for x in row])
                except ValueError:
                    raise DataError(f"line {reader.line_num}: non-numeric value") from None
    arr = np.asarray(data, dtype=float).reshape(-1, len(header))
    if names is not None:
        idx = [header.index(n) for n in names]
        return list(names), arr[:, idx]
    return header, arr
