"""
CSV and JSON emission of experiment records.

CSV layout: ``#``-prefixed metadata lines first (tool/command, seed, the
config echoed line by line after ``# config: ``, the spec echo and summary as
compact JSON), then a header row of ``name[unit]`` cells and one row per grid
point, replication or group. Numbers use ``precision`` significant digits.
"""

from __future__ import annotations

import json
import math
from typing import Any, Iterable

import numpy as np

from .config import Config, dump_config, parse_config
from .experiments import ExperimentRecord

__all__ = ["column_unit", "render_csv", "render_json", "render", "config_from_echo"]

_UNITS = {
    "theta": "1",
    "t": "time",
    "time": "time",
    "group": "index",
    "replication": "index",
    "valid": "flag",
    "wealth_weight": "share",
    "draw": "gamma draw",
    "x": "gamma draw",
    "density": "1/draw",
    "closed_form": "resource",
    "oracle": "resource",
}


def column_unit(name: str) -> str:
    if name in _UNITS:
        return _UNITS[name]
    if name.startswith(("x_", "consumption", "mean_consumption", "std_consumption")):
        return "resource"
    if name.startswith(("rho", "delta_disagreement", "discount_rate")):
        return "1/time"
    return "1"


def _fmt(value: Any, precision: int) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if value == 0.0:
        return "0"
    return format(value, f".{precision}g")


def _round(obj: Any, precision: int) -> Any:
    if isinstance(obj, dict):
        return {str(k): _round(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, precision) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_round(v, precision) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        return float(format(v, f".{precision}g"))
    return obj


def _row_values(record: ExperimentRecord) -> Iterable[list]:
    int_cols = {k for k, c in enumerate(record.columns) if c in ("group", "replication", "valid")}
    for row in record.rows:
        yield [int(v) if k in int_cols else float(v) for k, v in enumerate(row)]


def render_csv(record: ExperimentRecord, command: str, seed: int | None, config: Config | None,
               precision: int = 12, extra: dict[str, Any] | None = None) -> str:
    lines = [f"# lobbyrate {command}"]
    if seed is not None:
        lines.append(f"# seed: {seed}")
    if config is not None:
        for text in dump_config(config).splitlines():
            lines.append(f"# config: {text}")
    lines.append("# spec: " + json.dumps(_round(record.spec, precision), separators=(",", ":")))
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: " + json.dumps(_round(value, precision)))
    for note in record.notes:
        lines.append(f"# note: {note}")
    lines.append("# summary: " + json.dumps(_round(record.summary, precision),
                                            separators=(",", ":")))
    lines.append(",".join(f"{c}[{column_unit(c)}]" for c in record.columns))
    for row in _row_values(record):
        lines.append(",".join(_fmt(v, precision) for v in row))
    return "\n".join(lines) + "\n"


def render_json(record: ExperimentRecord, command: str, seed: int | None, config: Config | None,
                precision: int = 12, extra: dict[str, Any] | None = None) -> str:
    doc = {
        "tool": "lobbyrate",
        "command": command,
        "seed": seed,
        "config": config.to_dict() if config is not None else None,
        "spec": _round(record.spec, precision),
        "notes": record.notes,
        "columns": record.columns,
        "units": [column_unit(c) for c in record.columns],
        "rows": [_round(r, precision) for r in _row_values(record)],
        "summary": _round(record.summary, precision),
    }
    if extra:
        doc["report"] = _round(extra, precision)
    return json.dumps(doc, indent=2) + "\n"


def render(record: ExperimentRecord, fmt: str, **kwargs) -> str:
    if fmt == "csv":
        return render_csv(record, **kwargs)
    if fmt == "json":
        return render_json(record, **kwargs)
    raise ValueError(f"unknown output format {fmt!r}")


def config_from_echo(text: str) -> Config:
    """Recover the configuration echoed into a CSV or JSON output."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(stripped)
        return parse_config(json.dumps(doc["config"]))
    prefix = "# config: "
    body = [line[len(prefix):] for line in text.splitlines() if line.startswith(prefix)]
    return parse_config("\n".join(body))
