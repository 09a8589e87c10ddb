"""Deterministic report and sweep serialization.

Reports are JSON with sorted keys; sweeps are CSV with a header row, LF line
endings, and floats printed as their shortest round-trip decimal (repr).
Wall-clock timings never enter report.json — they go to a timings.json
sidecar — so identical (config, seed) runs produce byte-identical reports.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from typing import Iterable, Sequence

import numpy as np


def jsonable(obj):
    """Recursively convert report payloads to plain JSON-serializable types."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):  # incl. np.float64, which subclasses float
        return float(obj) if math.isfinite(obj) else repr(float(obj))
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return jsonable(obj.to_dict())
        return jsonable(dataclasses.asdict(obj))
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def write_json(path, payload: dict):
    """Write sorted-key JSON with a trailing newline (byte-stable)."""
    text = json.dumps(jsonable(payload), sort_keys=True, indent=2)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]):
    """CSV with header row, LF endings, shortest round-trip float format."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([_cell(v) for v in row])


def check(name: str, passed, **witness) -> dict:
    """A single PASS/FAIL entry; extra keyword fields carry the witness."""
    entry = {"name": name, "passed": bool(passed)}
    for k, v in witness.items():
        entry[k] = v
    return entry


def summarize(checks: Sequence[dict]) -> dict:
    return {
        "n_checks": len(checks),
        "n_failed": sum(1 for c in checks if not c["passed"]),
        "passed": all(c["passed"] for c in checks),
    }


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
