"""Built-in datasets.

The presidents table lists days in office for the first 43 U.S. presidencies,
in order. Several surnames repeat (two Adams, two Harrisons, ...), so the
canonical datapoint id carries the presidency number: "Harrison-09" is the
31-day presidency, "Harrison-23" the four-year one.
"""

from __future__ import annotations

import numpy as np

__all__ = ["PRESIDENT_DAYS", "presidents_ids", "presidents_days"]

PRESIDENT_DAYS: tuple[tuple[str, int], ...] = (
    ("Washington", 2864),
    ("Adams", 1460),
    ("Jefferson", 2921),
    ("Madison", 2921),
    ("Monroe", 2921),
    ("Adams", 1460),
    ("Jackson", 2921),
    ("VanBuren", 1460),
    ("Harrison", 31),
    ("Tyler", 1427),
    ("Polk", 1460),
    ("Taylor", 491),
    ("Filmore", 967),
    ("Pierce", 1460),
    ("Buchanan", 1460),
    ("Lincoln", 1503),
    ("Johnson", 1418),
    ("Grant", 2921),
    ("Hayes", 1460),
    ("Garfield", 199),
    ("Arthur", 1260),
    ("Cleveland", 1460),
    ("Harrison", 1460),
    ("Cleveland", 1460),
    ("McKinley", 1655),
    ("Roosevelt", 2727),
    ("Taft", 1460),
    ("Wilson", 2921),
    ("Harding", 881),
    ("Coolidge", 2039),
    ("Hoover", 1460),
    ("Roosevelt", 4452),
    ("Truman", 2810),
    ("Eisenhower", 2922),
    ("Kennedy", 1036),
    ("Johnson", 1886),
    ("Nixon", 2027),
    ("Ford", 895),
    ("Carter", 1461),
    ("Reagan", 2922),
    ("Bush", 1461),
    ("Clinton", 2922),
    ("Bush", 1110),
)


def presidents_ids() -> tuple[str, ...]:
    return tuple(
        f"{name}-{i + 1:02d}" for i, (name, _) in enumerate(PRESIDENT_DAYS)
    )


def presidents_days() -> np.ndarray:
    return np.array([days for _, days in PRESIDENT_DAYS], dtype=np.float64)
