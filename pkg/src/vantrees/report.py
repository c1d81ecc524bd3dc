"""Deterministic JSON and CSV emission.

Floats are written with 17 significant digits (``%.17g``) so that every
value round-trips exactly and two runs with the same inputs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import fields, is_dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def to_plain(obj: Any) -> Any:
    """Recursively convert numpy values and dataclasses into JSON-compatible python objects."""
    if is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "as_dict"):
            return to_plain(obj.as_dict())
        return {f.name: to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        text = fmt(obj)
        # JSON has no inf/nan literals; quote them
        return text if math.isfinite(obj) else json.dumps(text)
    return json.dumps(obj)


def dumps(obj: Any, indent: int = 2) -> str:
    return _encode(to_plain(obj), indent, 0) + "\n"


def flatten(obj: Any, prefix: str = "") -> dict[str, Any]:
    """Flatten nested dicts/lists into ``a.b[0][1]``-style keys."""
    plain = to_plain(obj)
    out: dict[str, Any] = {}

    def walk(v, key):
        if isinstance(v, dict):
            for k, w in v.items():
                walk(w, f"{key}.{k}" if key else k)
        elif isinstance(v, list):
            for i, w in enumerate(v):
                walk(w, f"{key}[{i}]")
        else:
            out[key] = v

    walk(plain, prefix)
    return out


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def records_csv(records: Sequence[dict]) -> str:
    """CSV from flat dicts; the header is the union of keys in first-seen order."""
    header: list[str] = []
    for r in records:
        header.extend(k for k in r if k not in header)
    return csv_text(header, ([r.get(k) for k in header] for r in records))


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
