"""Published reference values for degraded clusterings (means over subjects).

Rows are ``(k, m, jaccard, swc, dbi, mae)`` where ``k`` is the number of
observations each boundary was shifted and ``m`` the number of segments given
a wrong pattern.
"""
from __future__ import annotations

from typing import NamedTuple, Optional


class ReferenceRow(NamedTuple):
    stage: str
    completeness: int
    k: int
    m: int
    jaccard: float
    swc: float
    dbi: float
    mae: float


_RAW = {
    "correlated": {
        100: [
            (0, 0, 1.0, 0.98, 0.04, 0.02), (50, 0, 0.99, 0.95, 0.08, 0.03), (200, 0, 0.98, 0.80, 0.28, 0.06),
            (400, 0, 0.97, 0.54, 0.56, 0.11), (0, 5, 0.96, 0.80, 0.88, 0.06), (800, 0, 0.94, 0.23, 1.13, 0.19),
            (0, 20, 0.79, 0.33, 2.58, 0.18), (0, 40, 0.58, -0.08, 4.14, 0.33), (0, 60, 0.40, -0.28, 6.32, 0.46),
            (0, 80, 0.23, -0.36, 7.37, 0.63), (800, 100, 0.002, -0.37, 6.73, 0.73), (0, 100, 0.0, -0.38, 7.05, 0.77),
        ],
        70: [
            (0, 0, 1.0, 0.97, 0.05, 0.03), (50, 0, 0.99, 0.94, 0.10, 0.03), (200, 0, 0.98, 0.69, 0.40, 0.08),
            (0, 5, 0.96, 0.80, 0.88, 0.06), (400, 0, 0.96, 0.42, 0.82, 0.13), (0, 20, 0.79, 0.32, 2.58, 0.18),
            (0, 40, 0.58, -0.09, 4.12, 0.33), (0, 60, 0.40, -0.28, 6.31, 0.46), (0, 80, 0.23, -0.36, 7.36, 0.63),
            (0, 100, 0.0, -0.38, 7.02, 0.77),
        ],
        10: [
            (0, 0, 1.0, 0.92, 0.14, 0.03), (50, 0, 0.96, 0.44, 0.74, 0.13), (0, 5, 0.96, 0.75, 0.93, 0.07),
            (100, 0, 0.92, 0.13, 1.40, 0.23), (0, 20, 0.79, 0.29, 2.63, 0.19), (0, 40, 0.58, -0.10, 4.16, 0.34),
            (0, 60, 0.40, -0.28, 6.23, 0.47), (0, 80, 0.23, -0.36, 7.26, 0.63), (100, 100, 0.004, -0.37, 6.55, 0.73),
            (0, 100, 0.0, -0.38, 7.00, 0.77),
        ],
    },
    "non-normal": {
        100: [
            (0, 0, 1.0, 0.98, 0.04, 0.02), (50, 0, 0.99, 0.95, 0.08, 0.03), (200, 0, 0.98, 0.80, 0.28, 0.06),
            (400, 0, 0.97, 0.54, 0.56, 0.11), (0, 5, 0.96, 0.80, 0.88, 0.06), (800, 0, 0.94, 0.23, 1.13, 0.19),
            (0, 20, 0.79, 0.33, 2.58, 0.18), (0, 40, 0.58, -0.08, 4.14, 0.33), (0, 60, 0.40, -0.28, 6.36, 0.46),
            (0, 80, 0.23, -0.36, 7.37, 0.63), (800, 100, 0.003, -0.37, 6.73, 0.73), (0, 100, 0.0, -0.38, 7.05, 0.77),
        ],
        70: [
            (0, 0, 1.0, 0.97, 0.05, 0.03), (50, 0, 0.99, 0.94, 0.10, 0.03), (200, 0, 0.98, 0.69, 0.40, 0.08),
            (0, 5, 0.96, 0.80, 0.88, 0.06), (400, 0, 0.96, 0.42, 0.82, 0.13), (0, 20, 0.79, 0.32, 2.58, 0.18),
            (0, 40, 0.58, -0.09, 4.12, 0.33), (0, 60, 0.40, -0.28, 6.33, 0.46), (0, 80, 0.23, -0.36, 7.36, 0.63),
            (0, 100, 0.0, -0.38, 7.02, 0.77),
        ],
        10: [
            (0, 0, 1.0, 0.92, 0.14, 0.03), (50, 0, 0.96, 0.44, 0.74, 0.13), (0, 5, 0.96, 0.75, 0.93, 0.07),
            (100, 0, 0.92, 0.13, 1.40, 0.23), (0, 20, 0.79, 0.29, 2.62, 0.19), (0, 40, 0.58, -0.10, 4.16, 0.34),
            (0, 60, 0.40, -0.28, 6.25, 0.47), (0, 80, 0.23, -0.36, 7.31, 0.63), (100, 100, 0.004, -0.37, 6.55, 0.73),
            (0, 100, 0.0, -0.38, 7.00, 0.77),
        ],
    },
    "downsampled": {
        100: [
            (0, 0, 1.0, 0.63, 0.50, 0.13), (0, 5, 0.96, 0.46, 1.14, 0.18), (50, 0, 0.80, -0.16, 2.87, 0.39),
            (0, 20, 0.79, 0.09, 2.86, 0.27), (100, 0, 0.65, -0.28, 4.88, 0.48), (0, 40, 0.58, -0.18, 4.16, 0.38),
            (0, 60, 0.40, -0.31, 6.26, 0.48), (0, 80, 0.23, -0.36, 7.77, 0.61), (100, 100, 0.017, -0.38, 7.78, 0.68),
            (0, 100, 0.0, -0.38, 7.31, 0.72),
        ],
        70: [
            (0, 0, 1.0, 0.63, 0.49, 0.13), (0, 5, 0.96, 0.47, 1.13, 0.17), (50, 0, 0.80, -0.16, 2.98, 0.39),
            (0, 20, 0.79, 0.10, 2.92, 0.27), (100, 0, 0.65, -0.28, 5.04, 0.48), (0, 40, 0.58, -0.17, 4.18, 0.37),
            (0, 60, 0.40, -0.31, 6.31, 0.48), (0, 80, 0.23, -0.36, 7.48, 0.61), (100, 100, 0.02, -0.38, 7.45, 0.68),
            (0, 100, 0.0, -0.38, 7.28, 0.73),
        ],
        10: [
            (0, 0, 1.0, 0.67, 0.44, 0.11), (0, 5, 0.96, 0.53, 1.08, 0.14), (50, 0, 0.80, -0.15, 3.08, 0.39),
            (0, 20, 0.79, 0.14, 2.73, 0.25), (100, 0, 0.65, -0.28, 4.79, 0.48), (0, 40, 0.58, -0.16, 4.23, 0.37),
            (0, 60, 0.40, -0.30, 6.16, 0.47), (0, 80, 0.23, -0.36, 7.15, 0.62), (100, 100, 0.02, -0.38, 7.66, 0.70),
            (0, 100, 0.0, -0.38, 7.11, 0.74),
        ],
    },
}

REFERENCE_ROWS: tuple[ReferenceRow, ...] = tuple(
    ReferenceRow(stage, comp, *row)
    for stage, by_comp in _RAW.items()
    for comp, rows in by_comp.items()
    for row in rows
)


def rows_for(stage: str, completeness: int) -> list[ReferenceRow]:
    return [r for r in REFERENCE_ROWS if r.stage == stage and r.completeness == completeness]


def lookup(stage: str, completeness: int, k: int, m: int) -> ReferenceRow:
    for r in rows_for(stage, completeness):
        if r.k == k and r.m == m:
            return r
    raise KeyError(f"no reference row for {stage} {completeness}% k={k} m={m}")


def nearest_row(stage: str, completeness: int, jaccard: float) -> Optional[ReferenceRow]:
    """Row of the matching variant whose Jaccard is closest; ``None`` for raw data."""
    rows = rows_for(stage, completeness)
    if not rows:
        return None
    return min(rows, key=lambda r: abs(r.jaccard - jaccard))
