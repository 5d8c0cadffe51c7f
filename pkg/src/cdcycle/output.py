"""CSV and JSON writers with lossless numeric formatting.

All floating-point values go out with 17 significant digits so a written
file round-trips bit for bit back into doubles.
"""

from __future__ import annotations

import json
import math
from pathlib import Path


def format_number(value) -> str:
    """Render a number losslessly (17 significant digits for floats)."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int,)):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    """Write rows (iterable of sequences) as CSV with lossless numbers."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):  # numpy scalars
        try:
            return obj.item()
        except (AttributeError, ValueError):
            pass
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


def write_json(path: str | Path, payload: dict) -> Path:
    """Write a JSON report with deterministic key order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return path
