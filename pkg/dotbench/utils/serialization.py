"""JSON and CSV emission for solutions and reports."""
import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np
from pydantic import BaseModel


def to_jsonable(value: Any) -> Any:
    """Convert pydantic models and numpy values into plain JSON types."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump())
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def write_json(path: Path, data: Any) -> Path:
    """Write sorted, indented JSON; identical data gives identical bytes."""
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(data), indent=2, sort_keys=True, allow_nan=True) + "\n")
    return path


def write_csv(path: Path, rows: Iterable[Any], columns: Sequence[str] = ()) -> Path:
    """Write dict-like rows (or pydantic models) as CSV with a header."""
    records: List[Dict[str, Any]] = [to_jsonable(r) for r in rows]
    fieldnames = list(columns) or (list(records[0].keys()) if records else [])
    path = Path(path)
    with path.open('w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames, extrasaction='ignore', lineterminator='\n')
        writer.writeheader()
        for record in records:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in record.items()})
    return path


def coupling_rows(mass: np.ndarray, density: np.ndarray) -> List[Dict[str, Any]]:
    """Long-format coupling: one row per product cell with its multi-index."""
    rows = []
    for index in np.ndindex(mass.shape):
        row: Dict[str, Any] = {f'i{k}': int(v) for k, v in enumerate(index)}
        row['mass'] = float(mass[index])
        row['density'] = float(density[index])
        rows.append(row)
    return rows
