import csv
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel

from src.core.errors import DataIOError

Row = Union[BaseModel, dict]


def _as_dict(row: Row) -> dict:
    return row.model_dump() if isinstance(row, BaseModel) else dict(row)


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Union[str, Path], rows: Iterable[Row], fieldnames: Optional[Sequence[str]] = None) -> Path:
    records: List[dict] = [_as_dict(r) for r in rows]
    if fieldnames is None:
        fieldnames = list(records[0]) if records else []
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            for rec in records:
                writer.writerow({k: _format(rec.get(k, "")) for k in fieldnames})
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc.strerror or exc}")
    return path
