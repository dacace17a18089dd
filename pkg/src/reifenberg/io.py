"""Point cloud CSV files and JSON report helpers.

CSV layout: a header line ``# dim=<n> resolution=<h> label=<text>`` followed by
one point per row, ``n`` comma-separated decimal floats.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .geometry import InputError, PointCloud

_HEADER = re.compile(r"#\s*dim=(\d+)\s+resolution=(\S+)(?:\s+label=(.*))?$")


def write_cloud(cloud: PointCloud, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    label = cloud.label.replace("\n", " ")
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# dim={cloud.ambient_dim} resolution={cloud.resolution!r} label={label}\n")
        np.savetxt(fh, cloud.points, delimiter=",", fmt="%.17g")
    return path


def read_cloud(path) -> PointCloud:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            header = fh.readline().strip()
            match = _HEADER.match(header)
            if not match:
                raise InputError(f"{path}: missing or malformed header line {header!r}")
            dim, res, label = int(match.group(1)), float(match.group(2)), (match.group(3) or "")
            rows = [line for line in fh.read().splitlines() if line.strip()]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no points")
    widths = {line.count(",") + 1 for line in rows}
    if widths != {dim}:
        raise InputError(f"{path}: header says dim={dim} but rows have {sorted(widths)} columns")
    try:
        data = np.array(",".join(rows).split(","), dtype=float).reshape(len(rows), dim)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return PointCloud(data, res, label.strip())


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and dataclass-like objects for json."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path
