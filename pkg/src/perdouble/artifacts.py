"""CSV and JSON artifact writers.

Floats are written with ``repr`` so that files round-trip exactly and two
runs with the same inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .fixed_point import SCHEMA_VERSION, check_schema


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "" if x is None else str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def json_text(doc: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def read_json(path) -> dict:
    doc = json.loads(Path(path).read_text())
    check_schema(doc)
    return doc


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # NaN/inf are not JSON; keep them readable as strings
        return x if np.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


# -- per-module tables -------------------------------------------------------

def partition_csv(partition) -> str:
    half = partition.half
    rows = []
    for i, (lo, hi) in enumerate(partition.intervals):
        beta = partition.betas[i - half] if i >= half else None
        rows.append((partition.level, i + 1, lo, hi, partition.branch_codes[i], beta))
    return csv_text(["level", "index", "left", "right", "branch_code", "beta"], rows)


def pressure_csv(table) -> str:
    return csv_text(["n", "sum", "bound", "estimate"],
                    [(r["n"], r["sum"], r["bound"], r["estimate"]) for r in table])


def lambda_csv(trace) -> str:
    rows = [(r.n, r.lambda_n, r.iterations, r.residual, r.lambda_from_last_row,
             r.lambda_from_ratio) for r in trace.records]
    return csv_text(["n", "lambda_n", "iterations", "residual", "lambda_from_last_row",
                     "lambda_from_ratio"], rows)


def trace_json(trace, include_vectors: bool = False) -> str:
    levels = []
    for r in trace.records:
        d = {"n": r.n, "lambda_n": r.lambda_n, "iterations": r.iterations,
             "final_shift_norm": r.final_shift_norm, "residual": r.residual,
             "lambda_from_last_row": r.lambda_from_last_row,
             "lambda_from_ratio": r.lambda_from_ratio,
             "lambda_text_formula": r.lambda_text_formula}
        if include_vectors:
            d["v"] = r.v.entries
        levels.append(d)
    return json_text({
        "alpha": trace.alpha,
        "levels": levels,
        "lambda_extrapolated": trace.lambda_extrapolated,
        "delta_reference": trace.delta_reference,
        "delta_reference_source": trace.delta_reference_source,
        "failures": trace.failures,
    })
