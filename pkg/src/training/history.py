from pathlib import Path
from typing import List, Optional, Union

from src.helpers.csv_helpers import write_csv
from src.schemas.report_schema import HistoryRow

HISTORY_COLUMNS = ["epoch", "lr", "train_loss", "train_acc", "val_acc"]


class History:
    def __init__(self, rows: Optional[List[HistoryRow]] = None):
        self.rows: List[HistoryRow] = list(rows or [])

    def append(self, row: HistoryRow) -> None:
        self.rows.append(row)

    def best(self) -> Optional[HistoryRow]:
        # earliest epoch wins ties
        return max(self.rows, key=lambda r: (r.val_acc, -r.epoch), default=None)

    def last(self) -> Optional[HistoryRow]:
        return self.rows[-1] if self.rows else None

    def to_csv(self, path: Union[str, Path]) -> Path:
        return write_csv(path, self.rows, HISTORY_COLUMNS)

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, History) and self.rows == other.rows
