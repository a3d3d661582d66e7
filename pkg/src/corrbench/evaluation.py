"""Clustering evaluation over correlation-structure segments.

Internal indices (SWC, DBI) operate on per-segment Spearman vectors with an
L5 distance; cluster-to-structure mapping uses L1.  Jaccard is counted per
observation: the share of observations whose (mapped) pattern id matches
ground truth.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np

from . import patterns as pt
from . import reference
from .datagen import SubjectDataset
from .degrade import Clustering
from .estimators import DegenerateBlockError, get_estimator

MATCH_TOLERANCE = 0.1
DEGENERATE_DISTANCE = 1e-12


class DegenerateCentroidWarning(RuntimeWarning):
    """Two cluster centroids coincide, so a Davies-Bouldin ratio is unbounded."""


class CoverageError(ValueError):
    """Two clusterings do not label the same observations."""


class DistanceSpec(NamedTuple):
    p: float = 5.0

    def check(self) -> "DistanceSpec":
        if not self.p >= 1:
            raise ValueError(f"Minkowski exponent must be >= 1, got {self.p}")
        return self


def _p(spec) -> float:
    p = spec.p if isinstance(spec, DistanceSpec) else float(spec)
    return DistanceSpec(p).check().p


def lp_distance(a, b, p=5) -> float:
    """Minkowski distance between two ``(r12, r13, r23)`` vectors."""
    p = _p(p)
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return float(np.sum(d**p) ** (1.0 / p))


def pairwise_lp(x: np.ndarray, y: Optional[np.ndarray] = None, p=5) -> np.ndarray:
    p = _p(p)
    x = np.asarray(x, dtype=float)
    y = x if y is None else np.asarray(y, dtype=float)
    d = np.abs(x[:, None, :] - y[None, :, :])
    return np.sum(d**p, axis=-1) ** (1.0 / p)


def mae(a, b) -> float:
    return float(np.mean(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def _encode(labels) -> tuple[np.ndarray, np.ndarray]:
    uniq, codes = np.unique(np.asarray(labels), return_inverse=True)
    if uniq.size < 2:
        raise ValueError("index undefined for fewer than two clusters")
    return uniq, codes


def swc(labels, vectors, p=5) -> float:
    """Mean silhouette width of segment vectors; singleton clusters score 0."""
    uniq, codes = _encode(labels)
    vectors = np.asarray(vectors, dtype=float)
    n, k = len(codes), uniq.size
    d = pairwise_lp(vectors, p=p)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), codes] = 1.0
    sums = d @ onehot
    counts = onehot.sum(axis=0)
    own = counts[codes]
    a = np.divide(sums[np.arange(n), codes], own - 1, out=np.zeros(n), where=own > 1)
    mean_other = sums / counts
    mean_other[np.arange(n), codes] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.divide(b - a, denom, out=np.zeros(n), where=denom > 0)
    s[own == 1] = 0.0
    return float(s.mean())


def cluster_centroids(values: np.ndarray, bounds, labels, method: str = "spearman") -> dict:
    """Correlation vector of all observations pooled per cluster."""
    est = get_estimator(method)
    labels = np.asarray(labels)
    out = {}
    for c in np.unique(labels):
        rows = np.concatenate([np.arange(lo, hi) for (lo, hi), lab in zip(bounds, labels) if lab == c])
        out[c.item()] = np.asarray(est(values[rows]), dtype=float)
    return out


def _dbi(labels, vectors, centroids: Mapping, p=5) -> tuple[float, int]:
    uniq, codes = _encode(labels)
    vectors = np.asarray(vectors, dtype=float)
    cents = np.array([centroids[c.item()] for c in uniq], dtype=float)
    to_centroid = pairwise_lp(vectors, cents, p=p)[np.arange(len(codes)), codes]
    scatter = np.bincount(codes, weights=to_centroid) / np.bincount(codes)
    between = pairwise_lp(cents, p=p)
    degenerate = between < DEGENERATE_DISTANCE
    np.fill_diagonal(degenerate, False)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (scatter[:, None] + scatter[None, :]) / between
    ratio[degenerate] = np.inf
    np.fill_diagonal(ratio, -np.inf)
    return float(ratio.max(axis=1).mean()), int(degenerate.sum() // 2)


def dbi(labels, vectors, centroids: Mapping, p=5) -> float:
    """Davies-Bouldin index; coincident centroids give ``inf`` plus a warning."""
    value, n_degenerate = _dbi(labels, vectors, centroids, p)
    if n_degenerate:
        warnings.warn(
            f"{n_degenerate} centroid pair(s) closer than {DEGENERATE_DISTANCE}; DBI is unbounded",
            DegenerateCentroidWarning,
            stacklevel=2,
        )
    return value


def jaccard(candidate: Clustering, gt: Clustering, timestamps, mapping: Optional[Mapping] = None) -> float:
    """Share of observations whose candidate label (after ``mapping``) equals ground truth."""
    timestamps = np.asarray(timestamps)
    cand = candidate.labels_at(timestamps)
    truth = gt.labels_at(timestamps)
    for name, lab in (("candidate", cand), ("ground truth", truth)):
        missing = int(np.sum(lab == -1))
        if missing:
            raise CoverageError(f"{name} leaves {missing} observations unlabelled")
    if mapping is not None:
        lookup = np.vectorize(lambda c: mapping.get(int(c), -2), otypes=[int])
        cand = lookup(cand)
    return float(np.mean(cand == truth))


@dataclass(frozen=True)
class ClusterMapping:
    cluster_id: int
    n_segments: int
    median: pt.CorrelationVector
    pattern_id: int
    distance: float
    matched: bool
    n_within: int


def _vectors_or_nan(values, bounds, method) -> np.ndarray:
    est = get_estimator(method)
    out = np.full((len(bounds), 3), np.nan)
    for i, (lo, hi) in enumerate(bounds):
        try:
            out[i] = est(values[lo:hi])
        except DegenerateBlockError:
            pass
    return out


def gt_structures(dataset: SubjectDataset, ids: Sequence[int], reference: str = "empirical") -> np.ndarray:
    """Structure each ground-truth pattern is held to, one row per id.

    ``empirical`` is the coefficient-wise median of the pattern's ground-truth
    segment estimates, so degradation already present in the data is not
    charged to the candidate; ``relaxed`` uses the catalogue targets.
    """
    if reference == "relaxed":
        return pt.relaxed_matrix_of(ids)
    if reference != "empirical":
        raise ValueError(f"reference must be 'empirical' or 'relaxed', got {reference!r}")
    emp = dataset.empirical()
    pids = dataset.pattern_ids()
    rows = []
    for pid in ids:
        own = emp[pids == pid]
        own = own[~np.isnan(own).any(axis=1)]
        rows.append(np.median(own, axis=0) if own.size else np.asarray(pt.get_pattern(pid).target()))
    return np.array(rows, dtype=float)


def map_clusters(
    candidate: Clustering,
    dataset: SubjectDataset,
    gt_ids: Optional[Sequence[int]] = None,
    p=1,
    tolerance: float = MATCH_TOLERANCE,
    method: str = "spearman",
    vectors: Optional[np.ndarray] = None,
    reference: str = "empirical",
) -> list[ClusterMapping]:
    """Map each candidate cluster's median segment vector to the nearest ground-truth structure."""
    ids = sorted(set(dataset.pattern_ids().tolist() if gt_ids is None else gt_ids))
    targets = gt_structures(dataset, ids, reference)
    if vectors is None:
        vectors = _vectors_or_nan(dataset.values, candidate.bounds(dataset.timestamps), method)
    out = []
    for c in candidate.clusters():
        rows = vectors[candidate.cluster_ids == c]
        rows = rows[~np.isnan(rows).any(axis=1)]
        if rows.shape[0] == 0:
            warnings.warn(f"cluster {c} has no estimable segment; excluded from mapping", stacklevel=2)
            continue
        med = np.median(rows, axis=0)
        dist = pairwise_lp(med[None, :], targets, p=p)[0]
        best = int(np.argmin(dist))
        within = np.all(np.abs(targets - med) <= tolerance + 1e-12, axis=1)
        out.append(
            ClusterMapping(
                cluster_id=int(c),
                n_segments=int(rows.shape[0]),
                median=pt.CorrelationVector(*map(float, med)),
                pattern_id=ids[best],
                distance=float(dist[best]),
                matched=bool(within[best]),
                n_within=int(within.sum()),
            )
        )
    return out


def pattern_measures(mapping: Sequence[ClusterMapping], gt_ids: Sequence[int]) -> tuple[float, float]:
    """(discovery %, specificity %)."""
    gt_ids = set(int(i) for i in gt_ids)
    if not mapping or not gt_ids:
        return 0.0, 0.0
    found = {m.pattern_id for m in mapping if m.matched} & gt_ids
    discovery = 100.0 * len(found) / len(gt_ids)
    specificity = 100.0 * sum(m.n_within == 1 for m in mapping) / len(mapping)
    return discovery, specificity


def segmentation_measures(candidate: Clustering, gt: Clustering, timestamps) -> tuple[float, float]:
    """(segment count ratio, median segment length ratio) against ground truth."""
    ts = np.asarray(timestamps)
    ratio = candidate.n_segments / gt.n_segments
    length_ratio = float(np.median(candidate.lengths(ts)) / np.median(gt.lengths(ts)))
    return float(ratio), length_ratio


def out_of_tolerance_count(labels) -> int:
    """Segments whose empirical vector leaves the band of its pattern's canonical coefficients."""
    if isinstance(labels, SubjectDataset):
        labels = labels.labels
    if not labels:
        return 0
    emp = np.array([lab.empirical for lab in labels], dtype=float)
    canon = np.array([pt.get_pattern(lab.pattern_id).canonical for lab in labels])
    return int(np.sum(~pt.within_tolerance_many(emp, canon)))


@dataclass(frozen=True)
class EvaluationReport:
    swc: float
    dbi: float
    jaccard: float
    mae_mean: float
    segments_outside_tolerance: int
    pattern_discovery_pct: float
    pattern_specificity_pct: float
    segmentation_ratio: float
    segment_length_ratio: float
    n_clusters: int
    mapping: tuple[ClusterMapping, ...] = field(repr=False)
    dbi_degenerate: bool = False
    n_excluded_segments: int = 0
    provenance: str = "ground_truth"
    k: int = 0
    m: int = 0
    reference: Optional[reference.ReferenceRow] = None

    SCALARS = (
        "provenance", "k", "m", "swc", "dbi", "dbi_degenerate", "jaccard", "mae_mean",
        "segments_outside_tolerance", "pattern_discovery_pct", "pattern_specificity_pct",
        "segmentation_ratio", "segment_length_ratio", "n_clusters", "n_excluded_segments",
    )

    def to_row(self) -> dict:
        row = {name: getattr(self, name) for name in self.SCALARS}
        ref = self.reference
        for name in ("k", "m", "jaccard", "swc", "dbi", "mae"):
            row[f"ref_{name}"] = "" if ref is None else getattr(ref, name)
        return row


def evaluate(
    candidate: Clustering,
    dataset: SubjectDataset,
    gt: Optional[Clustering] = None,
    p_index=5,
    p_map=1,
    map_ids: Optional[bool] = None,
    method: str = "spearman",
) -> EvaluationReport:
    """Score one candidate clustering of ``dataset`` against its ground truth.

    ``map_ids`` defaults to mapping only when the candidate's cluster ids are
    not pattern ids (provenance ``external``).
    """
    if candidate is None or candidate.n_segments == 0:
        raise ValueError("empty candidate clustering")
    gt = Clustering.from_dataset(dataset) if gt is None else gt
    ts, values = dataset.timestamps, dataset.values
    if map_ids is None:
        map_ids = candidate.provenance == "external"

    bounds = candidate.bounds(ts)
    vectors = _vectors_or_nan(values, bounds, method)
    ok = ~np.isnan(vectors).any(axis=1)
    n_excluded = int((~ok).sum())
    if n_excluded:
        warnings.warn(f"{n_excluded} candidate segment(s) too short or constant; excluded", stacklevel=2)

    gt_ids = sorted(set(gt.cluster_ids.tolist()))
    mapping = map_clusters(candidate, dataset, gt_ids, p=p_map, method=method, vectors=vectors)
    if map_ids:
        to_pattern = {mp.cluster_id: mp.pattern_id for mp in mapping}
        seg_patterns = np.array([to_pattern.get(int(c), -1) for c in candidate.cluster_ids])
    else:
        to_pattern = None
        seg_patterns = candidate.cluster_ids.copy()

    labels = candidate.cluster_ids[ok]
    vec_ok = vectors[ok]
    kept_bounds = [b for b, keep in zip(bounds, ok) if keep]
    centroids = cluster_centroids(values, kept_bounds, labels, method)
    swc_value = swc(labels, vec_ok, p_index)
    dbi_value, n_degenerate = _dbi(labels, vec_ok, centroids, p_index)

    assigned = seg_patterns[ok]
    modelled = np.array([pid >= 0 and pt.get_pattern(pid).modelled for pid in assigned])
    errors = np.full(len(assigned), np.nan)
    if modelled.any():
        targets = pt.relaxed_matrix_of(assigned[modelled])
        errors[modelled] = np.mean(np.abs(vec_ok[modelled] - targets), axis=1)
        canon = np.array([pt.get_pattern(pid).canonical for pid in assigned[modelled]])
        outside = int(np.sum(~pt.within_tolerance_many(vec_ok[modelled], canon)))
    else:
        outside = 0
    outside += int((~modelled).sum())

    discovery, specificity = pattern_measures(mapping, gt_ids)
    seg_ratio, len_ratio = segmentation_measures(candidate, gt, ts)
    j = jaccard(candidate, gt, ts, to_pattern)
    return EvaluationReport(
        swc=swc_value,
        dbi=dbi_value,
        jaccard=j,
        mae_mean=float(np.nanmean(errors)) if modelled.any() else float("nan"),
        segments_outside_tolerance=outside,
        pattern_discovery_pct=discovery,
        pattern_specificity_pct=specificity,
        segmentation_ratio=seg_ratio,
        segment_length_ratio=len_ratio,
        n_clusters=int(np.unique(candidate.cluster_ids).size),
        mapping=tuple(mapping),
        dbi_degenerate=bool(n_degenerate),
        n_excluded_segments=n_excluded,
        provenance=candidate.provenance,
        k=candidate.k,
        m=candidate.m,
        reference=reference.nearest_row(dataset.stage, dataset.completeness, j),
    )
