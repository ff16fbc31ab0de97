"""CSV/JSON serialization of fields and results (12 significant digits)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .field import EXACT_TAIL, GraphField, GridSpec, Mesh, support_classification
from .graph import MetricGraph


def fmt(x: Any) -> str:
    """Format one CSV cell."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return f"{x:.12g}"
    return str(x)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(f"{x:.12g}")
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path, data: Mapping) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_table(path, columns: Sequence[str], rows: Iterable[Mapping]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])
    return path


def write_field(path, u: GraphField) -> tuple[Path, Path]:
    """Field CSV (edge_id, x, u) plus a JSON sidecar with everything needed to read it back."""
    path = Path(path)
    rows = []
    for e in u.graph.edges:
        x, s = u.edge_values(e.id)
        rows.extend({"edge_id": e.id, "x": xi, "u": si} for xi, si in zip(x, s))
    write_table(path, ("edge_id", "x", "u"), rows)
    side = path.with_suffix(path.suffix + ".json")
    write_json(side, {
        "graph": u.graph.to_dict(),
        "grid": u.grid.to_dict(),
        "nonlinearity": u.nonlinearity,
        "halfline_mode": u.halfline_mode,
        "tail_rate": u.tail_rate,
        "support": support_classification(u).value,
    })
    return path, side


def read_field(path) -> GraphField:
    path = Path(path)
    side = path.with_suffix(path.suffix + ".json")
    try:
        meta = json.loads(side.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read field sidecar {side}: {exc}") from None
    g = MetricGraph.from_dict(meta["graph"])
    mesh = Mesh(g, GridSpec.from_dict(meta["grid"]), meta["halfline_mode"])
    values: dict[str, list[float]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            values.setdefault(row["edge_id"], []).append(float(row["u"]))
    arrays = {k: np.array(v) for k, v in values.items()}
    if meta["halfline_mode"] == EXACT_TAIL:
        for e in g.halflines:
            if e.id in arrays:
                arrays[e.id] = arrays[e.id][:1]
    # 12-digit output: vertex copies agree exactly, interior rounding is harmless
    return GraphField.from_edge_values(mesh, arrays, meta["nonlinearity"], meta.get("tail_rate"), atol=1e-9)


def write_result(path, result) -> Path:
    return write_json(path, result.to_dict())
