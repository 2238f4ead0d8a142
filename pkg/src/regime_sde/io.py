"""CSV/JSON writers with full-precision, byte-stable number formatting."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path


def fmt(value):
    """17 significant digits for floats, plain text for everything else."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.16e}"
    return str(value)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).write_text(csv_text(header, rows))


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _clean(obj.item())
    return obj


def json_text(obj):
    return json.dumps(_clean(obj), indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(json_text(obj))


CURVE_HEADER = ("t", "phi", "mean", "var", "regime")
EMPIRICAL_HEADER = ("t", "phi_hat", "regime", "mean_hat", "var_hat")
PROBE_HEADER = ("step", "phi_hat", "regime", "flip_count")
PATHS_HEADER = ("t", "path", "state")
