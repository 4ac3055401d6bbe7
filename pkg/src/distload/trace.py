"""CSV trace and JSON summary output.

Column order (stable; documented in the README):

    t, phase, p_Cx, p_Cy, theta, v_Cx, v_Cy, omega, z_Cx, z_Cy, eerd, eec,
    then for each robot i = 0..n-1:
    z{i}_x, z{i}_y, omega{i}, J{i}, zC{i}_x, zC{i}_y, vC{i}_x, vC{i}_y, m{i}

Truth columns (p_C .. z_C) are ground truth; per-robot columns are that
robot's estimates, ``nan`` while not yet available.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Optional, TextIO

TRUTH_COLUMNS = ["p_Cx", "p_Cy", "theta", "v_Cx", "v_Cy", "omega", "z_Cx", "z_Cy"]
ROBOT_FIELDS = ["z{i}_x", "z{i}_y", "omega{i}", "J{i}", "zC{i}_x", "zC{i}_y", "vC{i}_x", "vC{i}_y", "m{i}"]


def header(n: int) -> list:
    cols = ["t", "phase", *TRUTH_COLUMNS, "eerd", "eec"]
    for i in range(n):
        cols.extend(f.format(i=i) for f in ROBOT_FIELDS)
    return cols


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


class TraceWriter:
    """Streams rows to ``trace.csv`` so long runs do not hold the trace in memory."""

    def __init__(self, path, n: int):
        self.path = Path(path)
        self.n = n
        self.rows = 0
        self._fh: Optional[TextIO] = None
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", newline="\n", encoding="utf-8")
        except OSError as e:
            raise OSError(f"cannot open trace file {self.path}: {e}") from e
        self._fh.write(",".join(header(n)) + "\n")

    def write(self, values: Iterable):
        self._fh.write(",".join(_fmt(v) for v in values) + "\n")
        self.rows += 1

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def emit_trace(records: Iterable, n: int, out_dir, summary: dict, trace_name="trace.csv", summary_name="summary.json"):
    """Write pre-built records (each an iterable of row values) and the summary."""
    out = Path(out_dir)
    with TraceWriter(out / trace_name, n) as w:
        for r in records:
            w.write(r)
        rows = w.rows
    summary = dict(summary)
    summary.setdefault("rounds", rows)
    write_summary(out / summary_name, summary)
    return out / trace_name, out / summary_name


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    return obj


def write_summary(path, summary: dict):
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write summary {p}: {e}") from e
