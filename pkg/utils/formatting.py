"""Deterministic JSON and CSV writers."""
import dataclasses
import enum
import math
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np
import orjson
import pandas as pd


def round15(value: float) -> float:
    if not math.isfinite(value):
        return value
    return float(f"{value:.15g}")


def to_jsonable(obj: Any) -> Any:
    """Convert reports to plain JSON types with 15-significant-digit floats."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return round15(value) if math.isfinite(value) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return obj.as_posix()
    return obj


def dumps(obj: Any) -> bytes:
    return orjson.dumps(to_jsonable(obj), option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)


def write_json(obj: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(obj) + b"\n")
    return path


def write_csv(columns: Dict[str, Any], path: Path) -> Path:
    """Write named columns; complex columns are split into Re/Im pairs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data: Dict[str, Any] = {}
    for name, values in columns.items():
        arr = np.asarray(values)
        if np.iscomplexobj(arr):
            data[f"Re {name}"] = arr.real
            data[f"Im {name}"] = arr.imag
        else:
            data[name] = arr
    pd.DataFrame(data).to_csv(
        path, index=False, lineterminator="\n", float_format="%.15g", encoding="utf-8"
    )
    return path
