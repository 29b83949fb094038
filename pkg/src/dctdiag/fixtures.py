"""Frozen comparison-grid fixtures from the published expert study.

The 2437-student dataset itself is not available; these counts are kept
only so the summary arithmetic and the shipped "table2" prior preset can
be exercised and regression-tested.
"""

from __future__ import annotations

import numpy as np

# Row order: reference (expert rule) class; column order: model class.
TABLE2_LABELS: tuple[str, ...] = (
    "LWH", "LZE", "LRV", "LU", "SDF", "SRN", "SU", "ATE", "AMO", "MIS", "AU", "UN",
)

TABLE2_COUNTS = np.array(
    [
        [386, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 98, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [10, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [6, 9, 0, 54, 0, 0, 0, 0, 0, 0, 0, 6],
        [0, 0, 0, 0, 83, 0, 4, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 159, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 2, 22, 40, 3, 0, 0, 0, 2],
        [0, 0, 0, 0, 0, 0, 0, 1050, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 79, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 6, 0, 0],
        [9, 0, 0, 0, 0, 0, 0, 63, 8, 0, 0, 1],
        [43, 6, 0, 15, 35, 14, 11, 119, 26, 2, 0, 66],
    ],
    dtype=int,
)

TABLE2_TOTAL = 2437

TABLE2_ROW_TOTALS: dict[str, int] = {
    label: int(row_sum)
    for label, row_sum in zip(TABLE2_LABELS, TABLE2_COUNTS.sum(axis=1))
}


def table2_priors() -> dict[str, float]:
    """Class priors from the published per-class student frequencies."""
    return {c: n / TABLE2_TOTAL for c, n in TABLE2_ROW_TOTALS.items()}
