"""
Result Exporter

Writes result tables and records to CSV, JSON and JSON-lines, and reads them
back. Output is byte-stable for fixed input: floats are written with repr,
JSON keeps insertion order and every file ends with a newline.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel

from fockloop_core import ExportError

logger = logging.getLogger(__name__)

Rows = List[Dict[str, Any]]


def config_label(config: Sequence[int]) -> str:
    """Occupation tuple as a CSV-safe label, e.g. (2,0,0)."""
    return "(" + ",".join(str(int(n)) for n in config) + ")"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(text: str) -> Any:
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _jsonable(data: Any) -> Any:
    if isinstance(data, BaseModel):
        return data.model_dump(mode="json")
    if isinstance(data, dict):
        return {str(k): _jsonable(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_jsonable(v) for v in data]
    if hasattr(data, "tolist"):
        return data.tolist()
    return data


def render_csv(rows: Rows, columns: Optional[List[str]] = None) -> str:
    """CSV text with a header row; an empty table gives the header alone."""
    if columns is None:
        if not rows:
            raise ExportError("Cannot infer CSV columns from an empty table")
        columns = list(rows[0].keys())
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c, "")) for c in columns])
    return buffer.getvalue()


def render_json(data: Any) -> str:
    return json.dumps(_jsonable(data), indent=2) + "\n"


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ExportError(f"Failed to write {path}: {e}") from e
    logger.info("Wrote %s", path)
    return path


def export_results(
    data: Union[Rows, Dict[str, Any], BaseModel],
    path: Union[str, Path],
    fmt: Optional[str] = None,
    columns: Optional[List[str]] = None,
) -> Path:
    """
    Write a result table (list of rows) or record to ``path``.

    Args:
        data: Rows for CSV; rows, a dict or a pydantic model for JSON.
        path: Destination file; parent directories are created.
        fmt: 'csv' or 'json'; inferred from the suffix when omitted.
        columns: CSV column order (required for an empty table).

    Returns:
        The written path.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        if isinstance(data, BaseModel) or isinstance(data, dict):
            raise ExportError("CSV export needs a list of rows")
        return _write(path, render_csv(list(data), columns))
    if fmt == "json":
        return _write(path, render_json(data))
    raise ExportError(f"Unsupported export format '{fmt}'")


def write_jsonl(records: Iterable[Union[BaseModel, Dict[str, Any]]], path: Union[str, Path]) -> Path:
    """One JSON object per line."""
    lines = [json.dumps(_jsonable(r)) for r in records]
    return _write(Path(path), "".join(line + "\n" for line in lines))


def read_csv(path: Union[str, Path]) -> Rows:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            return [{k: _parse_cell(v) for k, v in row.items()} for row in reader]
    except OSError as e:
        raise ExportError(f"Failed to read {path}: {e}") from e


def read_json(path: Union[str, Path]) -> Any:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ExportError(f"Failed to read {path}: {e}") from e


def read_jsonl(path: Union[str, Path]) -> Rows:
    try:
        with open(path, encoding="utf-8") as handle:
            return [json.loads(line) for line in handle if line.strip()]
    except (OSError, json.JSONDecodeError) as e:
        raise ExportError(f"Failed to read {path}: {e}") from e
