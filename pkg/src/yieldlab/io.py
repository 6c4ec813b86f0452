"""Deterministic CSV/JSON artifact writers."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

SIG_DIGITS = 12


def fmt_number(x) -> str:
    """12 significant digits for floats, plain integers for ints and bools."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{SIG_DIGITS}g}"


def round_sig(obj):
    """Round every float in a JSON-like structure to 12 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float) or hasattr(obj, "__float__") and not isinstance(obj, (list, tuple, dict)):
        x = float(obj)
        if not math.isfinite(x):
            return fmt_number(x)
        return float(fmt_number(x))
    if isinstance(obj, Mapping):
        return {str(k): round_sig(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v) for v in obj]
    return obj


def atomic_write(path, text: str) -> Path:
    """Write ``text`` with LF endings via a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(rows: Sequence[Mapping], columns: Optional[Sequence[str]] = None) -> str:
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("columns are required for an empty table")
        columns = list(rows[0].keys())
    lines = [",".join(columns)]
    for row in rows:
        if set(row.keys()) != set(columns):
            raise ValueError("rows must share the same columns")
        lines.append(",".join(fmt_number(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def json_text(obj) -> str:
    return json.dumps(round_sig(obj), indent=2) + "\n"


def emit_sweep(rows: Iterable[Mapping], fmt: str, path, columns: Optional[Sequence[str]] = None) -> Path:
    """Write homogeneous ``rows`` as CSV (fixed column order) or as a JSON list."""
    rows = list(rows)
    if fmt == "csv":
        return atomic_write(path, csv_text(rows, columns))
    if fmt == "json":
        if columns is not None:
            rows = [{c: r[c] for c in columns} for r in rows]
        return atomic_write(path, json_text(rows))
    raise ValueError(f"unknown format {fmt!r}")
