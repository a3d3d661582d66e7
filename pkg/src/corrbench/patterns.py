"""Catalogue of the 27 canonical three-variate correlation structures.

Coefficient vectors are always ordered as the row-major upper triangle of a
3x3 correlation matrix: ``(r12, r13, r23)``.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

PSD_TOL = -1e-9


class CorrelationVector(NamedTuple):
    r12: float
    r13: float
    r23: float

    @classmethod
    def from_matrix(cls, matrix) -> "CorrelationVector":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        return cls(float(m[0, 1]), float(m[0, 2]), float(m[1, 2]))

    def to_matrix(self) -> np.ndarray:
        a, b, c = self
        return np.array([[1.0, a, b], [a, 1.0, c], [b, c, 1.0]])

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class Band(NamedTuple):
    low: float
    high: float

    def __contains__(self, value) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class ToleranceBands:
    negative: Band = Band(-1.0, -0.7)
    negligible: Band = Band(-0.2, 0.2)
    positive: Band = Band(0.7, 1.0)

    def for_sign(self, c: int) -> Band:
        if c == -1:
            return self.negative
        if c == 0:
            return self.negligible
        if c == 1:
            return self.positive
        raise ValueError(f"canonical coefficient must be -1, 0 or 1, got {c!r}")


BANDS = ToleranceBands()


@dataclass(frozen=True)
class CanonicalPattern:
    id: int
    canonical: CorrelationVector
    relaxed: Optional[CorrelationVector]
    ideal: bool
    modelled: bool

    def target(self) -> CorrelationVector:
        """Relaxed coefficients; the reference structure for all error measures."""
        if self.relaxed is None:
            raise ValueError(f"pattern {self.id} cannot be modelled as a valid correlation matrix")
        return self.relaxed


# (canonical, relaxed) per id. Relaxed values are fixed constants, not re-derived.
_TABLE = {
    0: ((0, 0, 0), (0, 0, 0)),
    1: ((0, 0, 1), (0, 0, 1)),
    2: ((0, 0, -1), (0, 0, -1)),
    3: ((0, 1, 0), (0, 1, 0)),
    4: ((0, 1, 1), (0.0, 0.71, 0.7)),
    5: ((0, 1, -1), (0, 0.71, -0.7)),
    6: ((0, -1, 0), (0, -1, 0)),
    7: ((0, -1, 1), (0, -0.71, 0.7)),
    8: ((0, -1, -1), (0, -0.71, -0.7)),
    9: ((1, 0, 0), (1, 0, 0)),
    10: ((1, 0, 1), (0.71, 0, 0.7)),
    11: ((1, 0, -1), (0.71, 0, -0.7)),
    12: ((1, 1, 0), (0.71, 0.7, 0)),
    13: ((1, 1, 1), (1, 1, 1)),
    14: ((1, 1, -1), None),
    15: ((1, -1, 0), (0.71, -0.7, 0)),
    16: ((1, -1, 1), None),
    17: ((1, -1, -1), (1, -1, -1)),
    18: ((-1, 0, 0), (-1, 0, 0)),
    19: ((-1, 0, 1), (-0.71, 0, 0.7)),
    20: ((-1, 0, -1), (-0.71, 0, -0.7)),
    21: ((-1, 1, 0), (-0.71, 0.7, 0)),
    22: ((-1, 1, 1), None),
    23: ((-1, 1, -1), (-1, 1, -1)),
    24: ((-1, -1, 0), (-0.71, -0.7, 0)),
    25: ((-1, -1, 1), (-1, -1, 1)),
    26: ((-1, -1, -1), None),
}


def is_psd(v) -> bool:
    """True iff the unit-diagonal matrix induced by ``v`` has min eigenvalue >= -1e-9."""
    m = CorrelationVector(*v).to_matrix()
    return bool(np.linalg.eigvalsh(m)[0] >= PSD_TOL)


def _build() -> tuple[CanonicalPattern, ...]:
    out = []
    for pid in sorted(_TABLE):
        canon, relaxed = _TABLE[pid]
        canonical = CorrelationVector(*(float(c) for c in canon))
        rel = None if relaxed is None else CorrelationVector(*(float(c) for c in relaxed))
        out.append(
            CanonicalPattern(
                id=pid,
                canonical=canonical,
                relaxed=rel,
                ideal=rel is not None and rel == canonical,
                modelled=rel is not None,
            )
        )
    return tuple(out)


_CATALOGUE = _build()
MODELLED_IDS = tuple(p.id for p in _CATALOGUE if p.modelled)


def catalogue() -> list[CanonicalPattern]:
    return list(_CATALOGUE)


def get_pattern(pattern_id: int) -> CanonicalPattern:
    try:
        return _CATALOGUE[int(pattern_id)]
    except (IndexError, ValueError):
        raise KeyError(f"unknown pattern id {pattern_id!r}") from None


def modelled_patterns() -> list[CanonicalPattern]:
    return [p for p in _CATALOGUE if p.modelled]


def relaxed_matrix_of(ids) -> np.ndarray:
    """Stack the relaxed vectors of ``ids`` into a ``(len(ids), 3)`` array."""
    return np.array([get_pattern(i).target() for i in ids], dtype=float)


def band_of(c: int, bands: ToleranceBands = BANDS) -> Band:
    if isinstance(c, bool) or c not in (-1, 0, 1):
        raise ValueError(f"canonical coefficient must be -1, 0 or 1, got {c!r}")
    return bands.for_sign(int(c))


def within_tolerance(empirical, pattern: CanonicalPattern, bands: ToleranceBands = BANDS) -> bool:
    if not pattern.modelled:
        raise ValueError(f"pattern {pattern.id} is not modelled; no tolerance check defined")
    return all(e in band_of(c, bands) for e, c in zip(empirical, pattern.canonical))


def within_tolerance_many(empirical: np.ndarray, canonical: np.ndarray, bands: ToleranceBands = BANDS) -> np.ndarray:
    """Vectorised :func:`within_tolerance` over rows of ``(n, 3)`` arrays."""
    empirical = np.asarray(empirical, dtype=float)
    canonical = np.asarray(canonical)
    low = np.select([canonical == -1, canonical == 0], [bands.negative.low, bands.negligible.low], bands.positive.low)
    high = np.select([canonical == -1, canonical == 0], [bands.negative.high, bands.negligible.high], bands.positive.high)
    return np.all((empirical >= low) & (empirical <= high), axis=1)


def all_canonical_vectors() -> list[tuple[int, int, int]]:
    """{-1, 0, 1}^3 in id order (ids enumerate this product with digit order 0, 1, -1)."""
    return list(itertools.product((0, 1, -1), repeat=3))


def catalogue_csv() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "c12", "c13", "c23", "r12", "r13", "r23", "ideal", "modelled"])
    for p in _CATALOGUE:
        relaxed = [repr(x) for x in p.relaxed] if p.relaxed else ["", "", ""]
        writer.writerow([p.id, *(int(c) for c in p.canonical), *relaxed, p.ideal, p.modelled])
    return buf.getvalue()
