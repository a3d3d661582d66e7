"""Controlled imperfect clusterings derived from ground truth.

Three strategies: move every internal boundary forward by ``k`` observations,
reassign ``m`` segments to a wrong pattern, or both.  Clusterings are stored
on the time axis (inclusive start/end timestamps) so that one clustering can
be laid over any variant that shares the timeline.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .datagen import SubjectDataset

SHIFT_ANCHORS = (1, 50, 100, 200, 400, 800)
MISASSIGN_GRID = (1, 2, 3, 5, 8, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 90, 100)
PER_STRATEGY = 22


@dataclass(frozen=True, eq=False)
class Clustering:
    segment_ids: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    cluster_ids: np.ndarray
    provenance: str = "ground_truth"
    k: int = 0
    m: int = 0

    def __post_init__(self):
        n = len(self.segment_ids)
        if not (len(self.starts) == len(self.ends) == len(self.cluster_ids) == n):
            raise ValueError("clustering columns differ in length")
        if n == 0:
            raise ValueError("clustering has no segments")
        if np.any(self.ends < self.starts) or np.any(self.starts[1:] <= self.ends[:-1]):
            raise ValueError("clustering segments overlap or are out of order")

    @classmethod
    def from_dataset(cls, ds: SubjectDataset) -> "Clustering":
        return cls(
            segment_ids=np.array([lab.segment_id for lab in ds.labels], dtype=int),
            starts=np.array([lab.start for lab in ds.labels], dtype=np.int64),
            ends=np.array([lab.end for lab in ds.labels], dtype=np.int64),
            cluster_ids=ds.pattern_ids(),
        )

    @property
    def n_segments(self) -> int:
        return len(self.segment_ids)

    def clusters(self) -> np.ndarray:
        return np.unique(self.cluster_ids)

    def bounds(self, timestamps: np.ndarray) -> list[tuple[int, int]]:
        lo = np.searchsorted(timestamps, self.starts, side="left")
        hi = np.searchsorted(timestamps, self.ends, side="right")
        return list(zip(lo.tolist(), hi.tolist()))

    def labels_at(self, timestamps: np.ndarray) -> np.ndarray:
        """Cluster id of every observation; -1 where no segment covers it."""
        idx = np.searchsorted(self.starts, timestamps, side="right") - 1
        inside = (idx >= 0) & (timestamps <= self.ends[np.clip(idx, 0, None)])
        return np.where(inside, self.cluster_ids[np.clip(idx, 0, None)], -1)

    def lengths(self, timestamps: np.ndarray) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.bounds(timestamps)], dtype=int)


@dataclass(frozen=True)
class DegradationSuite:
    ground_truth: Clustering
    clusterings: tuple[Clustering, ...]

    @property
    def grid(self) -> list[tuple[str, int, int]]:
        return [(c.provenance, c.k, c.m) for c in self.clusterings]

    def __len__(self):
        return len(self.clusterings)


def _row_boundaries(gt: Clustering, timestamps: np.ndarray) -> np.ndarray:
    bounds = gt.bounds(timestamps)
    if bounds[0][0] != 0 or bounds[-1][1] != len(timestamps) or any(
        a[1] != b[0] for a, b in zip(bounds, bounds[1:])
    ):
        raise ValueError("ground truth does not partition the given timestamps")
    return np.array([hi for _, hi in bounds], dtype=int)


def shift_boundaries(gt: Clustering, timestamps: np.ndarray, k: int) -> Clustering:
    """Move every internal segment end forward by ``k`` observations.

    Equivalent to relabelling observation ``t`` with the ground-truth label of
    ``t - k``: internal segments keep their length, the first grows by ``k``
    and trailing segments pushed past the end of the series disappear.
    """
    timestamps = np.asarray(timestamps)
    stops = _row_boundaries(gt, timestamps)
    total = int(stops[-1])
    if not 0 <= k < total:
        raise ValueError(f"shift k={k} outside [0, {total - 1}]")
    if k == 0:
        return replace(gt, provenance="shifted", k=0)
    new_stops = np.r_[np.minimum(stops[:-1] + k, total), total]
    new_starts = np.r_[0, new_stops[:-1]]
    keep = new_stops > new_starts
    new_starts, new_stops = new_starts[keep], new_stops[keep]
    starts = timestamps[new_starts]
    starts[0] = gt.starts[0]
    ends = timestamps[new_stops - 1]
    ends[-1] = gt.ends[-1]
    return replace(
        gt,
        segment_ids=gt.segment_ids[keep],
        starts=starts,
        ends=ends,
        cluster_ids=gt.cluster_ids[keep],
        provenance="shifted",
        k=int(k),
        m=0,
    )


def misassign(gt: Clustering, m: int, seed, pattern_ids: Optional[Sequence[int]] = None) -> Clustering:
    """Give ``m`` distinct segments a uniformly drawn wrong pattern id."""
    n = gt.n_segments
    if not 0 <= m <= n:
        raise ValueError(f"m={m} outside [0, {n}]")
    pool = np.asarray(sorted(set(pattern_ids) if pattern_ids is not None else set(gt.cluster_ids.tolist())))
    if m and pool.size < 2:
        raise ValueError("need at least two pattern ids to assign a wrong one")
    rng = np.random.default_rng(seed)
    ids = gt.cluster_ids.copy()
    for i in rng.choice(n, size=m, replace=False):
        wrong = pool[pool != ids[i]]
        ids[i] = wrong[rng.integers(wrong.size)]
    return replace(gt, cluster_ids=ids, provenance="misassigned", k=0, m=int(m))


def combined(gt: Clustering, timestamps: np.ndarray, k: int, m: int, seed, pattern_ids=None, clamp_m: bool = False) -> Clustering:
    """Shift by ``k`` then misassign ``m`` segments of the shifted clustering.

    With ``clamp_m`` an ``m`` larger than the segments surviving the shift
    means "all of them".
    """
    shifted = shift_boundaries(gt, timestamps, k)
    if clamp_m:
        m = min(m, shifted.n_segments)
    mis = misassign(shifted, m, seed, pattern_ids)
    return replace(mis, provenance="combined", k=int(k), m=int(m))


def shift_limit(gt: Clustering, timestamps: np.ndarray) -> int:
    """Largest ``k`` the suite samples: smallest segment size minus 100, but at least 100."""
    stops = _row_boundaries(gt, timestamps)
    lengths = np.diff(np.r_[0, stops])
    return int(min(max(lengths.min() - 100, 100), stops[-1] - 1))


def build_suite(gt: Clustering, timestamps: np.ndarray, seed, pattern_ids=None) -> DegradationSuite:
    """22 shifted, 22 misassigned and 22 combined clusterings."""
    timestamps = np.asarray(timestamps)
    k_rng, m_ss, c_rng, c_ss = np.random.SeedSequence(seed).spawn(4)
    k_rng, c_rng = np.random.default_rng(k_rng), np.random.default_rng(c_rng)
    kmax = shift_limit(gt, timestamps)
    n = gt.n_segments

    anchors = [k for k in SHIFT_ANCHORS if k <= kmax]
    ks = set(anchors)
    while len(ks) < min(PER_STRATEGY, kmax):
        ks.add(int(k_rng.integers(1, kmax + 1)))
    ks = sorted(ks)
    ks += sorted(int(k) for k in k_rng.integers(1, kmax + 1, size=PER_STRATEGY - len(ks)))

    ms = [min(n, max(1, round(v * n / 100))) for v in MISASSIGN_GRID]

    out = [shift_boundaries(gt, timestamps, k) for k in ks]
    out += [misassign(gt, m, s, pattern_ids) for m, s in zip(ms, m_ss.spawn(len(ms)))]
    combo_ks = [int(k) for k in c_rng.integers(1, kmax + 1, size=PER_STRATEGY)]
    combo_ms = ms[:-2] + [n, n]
    combo_ks[-2] = min(100, kmax)
    combo_ks[-1] = anchors[-1] if anchors else kmax
    out += [
        combined(gt, timestamps, k, m, s, pattern_ids, clamp_m=True)
        for k, m, s in zip(combo_ks, combo_ms, c_ss.spawn(PER_STRATEGY))
    ]
    return DegradationSuite(ground_truth=gt, clusterings=tuple(out))


def reduce(ds: SubjectDataset, mode: str, fraction: float, seed) -> SubjectDataset:
    """Reduced-cluster or reduced-segment version of a ground-truth dataset."""
    if fraction not in (0.5, 0.25):
        raise ValueError(f"fraction must be 0.5 or 0.25, got {fraction}")
    if mode == "segments":
        keep = round(fraction * len(ds.labels))
        labels = ds.labels[:keep]
        stop = ds.segment_bounds()[keep - 1][1]
        return replace(ds, timestamps=ds.timestamps[:stop], values=ds.values[:stop], labels=labels)
    if mode != "clusters":
        raise ValueError(f"mode must be 'clusters' or 'segments', got {mode!r}")

    present = np.unique(ds.pattern_ids())
    rng = np.random.default_rng(seed)
    kept_ids = set(rng.choice(present, size=round(fraction * present.size), replace=False).tolist())
    step = ds.labels[1].start - ds.labels[0].end if len(ds.labels) > 1 else 1
    cursor = ds.labels[0].start
    ts_parts, val_parts, labels = [], [], []
    for lab, (lo, hi) in zip(ds.labels, ds.segment_bounds()):
        if lab.pattern_id not in kept_ids:
            continue
        offset = cursor - lab.start
        ts_parts.append(ds.timestamps[lo:hi] + offset)
        val_parts.append(ds.values[lo:hi])
        labels.append(replace(lab, start=lab.start + offset, end=lab.end + offset))
        cursor = lab.end + offset + step
    return replace(
        ds,
        timestamps=np.concatenate(ts_parts),
        values=np.concatenate(val_parts),
        labels=tuple(labels),
    )
