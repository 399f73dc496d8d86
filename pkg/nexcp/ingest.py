"""
ELEC2 loading and the permutation control.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from .errors import DataFormatError, DomainError
from .models import TaggedDataset

logger = logging.getLogger(__name__)

ELEC2_COLUMNS = (
    "date",
    "day",
    "period",
    "nswprice",
    "nswdemand",
    "vicprice",
    "vicdemand",
    "transfer",
)
FEATURE_COLUMNS = ("nswprice", "vicprice", "nswdemand", "vicdemand")
RESPONSE_COLUMN = "transfer"
EXPECTED_ROWS = 3444
SLOTS_PER_DAY = 48


@dataclass(frozen=True)
class Elec2Config:
    """
    Half-hour slots are 1-based: slot k covers [(k-1)/48, k/48) of the day,
    so 9:00-12:00 is slots 19-24.
    """

    first_slot: int = 19
    last_slot: int = 24
    drop_constant_prefix: bool = True
    prefix_epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not 1 <= self.first_slot <= self.last_slot <= SLOTS_PER_DAY:
            raise DomainError("slot window must satisfy 1 <= first <= last <= 48")
        if self.prefix_epsilon < 0:
            raise DomainError("prefix epsilon must be nonnegative")

    @property
    def slots(self) -> Tuple[int, int]:
        return self.first_slot, self.last_slot


def _slots(period: pd.Series) -> np.ndarray:
    values = period.to_numpy(dtype=float)
    # The public file stores the period scaled to [0, 1].
    if values.max() <= 1.0:
        return np.rint(values * (SLOTS_PER_DAY - 1)).astype(int) + 1
    return np.rint(values).astype(int)


def read_elec2(path: str) -> pd.DataFrame:
    """Read the eight ELEC2 fields (matched case-insensitively) as floats, in file order."""
    if not os.path.isfile(path):
        raise DataFormatError(f"ELEC2 file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc

    by_name = {str(col).strip().lower(): col for col in frame.columns}
    missing = [name for name in ELEC2_COLUMNS if name not in by_name]
    if missing:
        raise DataFormatError(f"missing columns: {', '.join(missing)}")
    frame = frame[[by_name[name] for name in ELEC2_COLUMNS]]
    frame.columns = list(ELEC2_COLUMNS)
    try:
        frame = frame.apply(pd.to_numeric, errors="raise")
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"unparseable value in {path}: {exc}") from exc
    if frame.isna().any().any():
        raise DataFormatError(f"missing values in {path}")
    return frame.astype(float)


def load_elec2(path: str, config: Elec2Config = Elec2Config()) -> TaggedDataset:
    """
    Keep rows in the configured slot window, drop the initial stretch where
    transfer does not move, and return (nswprice, vicprice, nswdemand,
    vicdemand) -> transfer tagged 1..N in file order.
    """
    frame = read_elec2(path)
    if frame.empty:
        raise DataFormatError(f"{path} holds no rows")
    slots = _slots(frame["period"])
    frame = frame[(slots >= config.first_slot) & (slots <= config.last_slot)]
    if frame.empty:
        raise DataFormatError("no rows fall inside the slot window")

    if config.drop_constant_prefix:
        transfer = frame[RESPONSE_COLUMN].to_numpy()
        moved = np.flatnonzero(np.abs(transfer - transfer[0]) > config.prefix_epsilon)
        if moved.size == 0:
            raise DataFormatError("transfer never changes inside the slot window")
        frame = frame.iloc[int(moved[0]) :]

    if len(frame) != EXPECTED_ROWS:
        logger.warning("ELEC2 yielded %d rows, expected %d", len(frame), EXPECTED_ROWS)
    return TaggedDataset.from_arrays(
        frame[list(FEATURE_COLUMNS)].to_numpy(),
        frame[RESPONSE_COLUMN].to_numpy(),
    )


def permute_dataset(data: TaggedDataset, rng: np.random.Generator) -> TaggedDataset:
    """Uniformly shuffle the (x, y) pairs; the result is a fresh series tagged 1..N."""
    if len(data) == 0:
        raise DomainError("cannot permute an empty dataset")
    order = rng.permutation(len(data))
    return TaggedDataset.from_arrays(np.asarray(data.X)[order], np.asarray(data.y)[order])
