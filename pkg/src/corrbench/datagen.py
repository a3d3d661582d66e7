"""Regime-switching three-variate data with known per-segment correlation structure.

The pipeline per subject is::

    raw (iid N(0,1)) -> correlated -> non-normal -> downsampled
                 \\            \\            \\
                  partial/sparse variants derived by Bernoulli row retention

Every stage is a pure function of its inputs and an explicit seed.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Optional

import numpy as np
from scipy import stats

from . import patterns as pt
from .estimators import segment_vectors
from .patterns import CorrelationVector

STAGES = ("raw", "correlated", "non-normal", "downsampled")
COMPLETENESS = (100, 70, 10)
# 2017-01-01T00:00:00Z; minute aligned so downsampling buckets align with segments
EPOCH = 1483228800

SPLITS = {
    # main seed, sparsification seed, degradation seed
    "exploratory": (666, 1661, 666),
    "confirmatory": (1905, 99, 2122),
}

_U_EPS = 1e-12


@dataclass(frozen=True)
class GenerationConfig:
    n_subjects: int = 30
    n_segments: int = 100
    segment_lengths: tuple[int, ...] = (900, 1200, 1800, 3600, 7200, 10800, 14400, 18000, 21600, 28800, 36000)
    pattern_ids: tuple[int, ...] = pt.MODELLED_IDS
    pattern_frequency: tuple[int, int] = (4, 5)
    sampling_interval: int = 1
    downsample_interval: int = 60
    retention: tuple[float, float, float] = (1.0, 0.7, 0.1)
    main_seed: int = 666
    sparsify_seed: int = 1661
    degrade_seed: int = 666
    transform_source: str = "canonical"
    # variate 1: generalized extreme value (scipy shape convention)
    v1_shape: tuple[float, float] = (-0.52, 0.07)
    v1_loc: tuple[float, float] = (0.1, 1.49)
    v1_scale: tuple[float, float] = (0.36, 3.22)
    # variate 2: negative binomial with fixed number of successes
    v2_n: float = 1.0
    v2_p: tuple[float, float] = (0.05, 0.4)
    # variate 3: generalized extreme value
    v3_shape: tuple[float, float] = (0.0, 0.08)
    v3_loc: tuple[float, float] = (88.79, 131.99)
    v3_scale: tuple[float, float] = (17.82, 53.53)

    def __post_init__(self):
        for length in self.segment_lengths:
            if length <= 0 or (length * self.sampling_interval) % self.downsample_interval:
                raise ValueError(
                    f"segment length {length} is not a positive multiple of the "
                    f"{self.downsample_interval}s downsampling interval"
                )
        for p in self.retention:
            if not 0 < p <= 1:
                raise ValueError(f"retention probability {p} outside (0, 1]")
        unknown = [i for i in self.pattern_ids if not pt.get_pattern(i).modelled]
        if unknown:
            raise ValueError(f"patterns {unknown} cannot be modelled")
        if self.transform_source not in ("canonical", "relaxed"):
            raise ValueError("transform_source must be 'canonical' or 'relaxed'")

    @classmethod
    def for_split(cls, split: str, **overrides) -> "GenerationConfig":
        try:
            main, sparsify, degrade = SPLITS[split]
        except KeyError:
            raise ValueError(f"unknown split {split!r}; choose from {sorted(SPLITS)}") from None
        base = dict(main_seed=main, sparsify_seed=sparsify, degrade_seed=degrade)
        base.update(overrides)
        return cls(**base)

    def subject_seed(self, index: int) -> int:
        return self.main_seed + index

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class SubjectDistributionParams:
    v1_shape: float
    v1_loc: float
    v1_scale: float
    v2_n: float
    v2_p: float
    v3_shape: float
    v3_loc: float
    v3_scale: float

    @classmethod
    def draw(cls, rng: np.random.Generator, config: GenerationConfig) -> "SubjectDistributionParams":
        # draw order fixed: (shape, loc, scale) for variate 1, p for variate 2, then variate 3
        u = lambda lo_hi: float(rng.uniform(*lo_hi))  # noqa: E731
        return cls(
            v1_shape=u(config.v1_shape), v1_loc=u(config.v1_loc), v1_scale=u(config.v1_scale),
            v2_n=float(config.v2_n), v2_p=u(config.v2_p),
            v3_shape=u(config.v3_shape), v3_loc=u(config.v3_loc), v3_scale=u(config.v3_scale),
        )

    def distributions(self):
        return (
            stats.genextreme(self.v1_shape, loc=self.v1_loc, scale=self.v1_scale),
            stats.nbinom(self.v2_n, self.v2_p),
            stats.genextreme(self.v3_shape, loc=self.v3_loc, scale=self.v3_scale),
        )


@dataclass(frozen=True)
class SegmentPlan:
    pattern_ids: tuple[int, ...]
    lengths: tuple[int, ...]

    def __len__(self):
        return len(self.pattern_ids)


@dataclass(frozen=True)
class SegmentLabel:
    segment_id: int
    start: int
    end: int
    length: int
    pattern_id: int
    target: CorrelationVector
    empirical: CorrelationVector
    mae: float


@dataclass(frozen=True, eq=False)
class SubjectDataset:
    subject_id: str
    stage: str
    completeness: int
    timestamps: np.ndarray
    values: np.ndarray
    labels: tuple[SegmentLabel, ...]
    meta: dict = field(default_factory=dict)

    @property
    def n_observations(self) -> int:
        return int(self.timestamps.shape[0])

    @property
    def variant(self) -> str:
        return f"{self.stage}_{self.completeness}"

    def segment_bounds(self) -> list[tuple[int, int]]:
        starts = np.array([lab.start for lab in self.labels], dtype=np.int64)
        ends = np.array([lab.end for lab in self.labels], dtype=np.int64)
        lo = np.searchsorted(self.timestamps, starts, side="left")
        hi = np.searchsorted(self.timestamps, ends, side="right")
        return list(zip(lo.tolist(), hi.tolist()))

    def segment_block(self, i: int) -> np.ndarray:
        lo, hi = self.segment_bounds()[i]
        return self.values[lo:hi]

    def pattern_ids(self) -> np.ndarray:
        return np.array([lab.pattern_id for lab in self.labels], dtype=int)

    def empirical(self) -> np.ndarray:
        return np.array([lab.empirical for lab in self.labels], dtype=float)

    def targets(self) -> np.ndarray:
        return np.array([lab.target for lab in self.labels], dtype=float)

    def maes(self) -> np.ndarray:
        return np.array([lab.mae for lab in self.labels], dtype=float)

    def relabel(self, method: str = "spearman") -> "SubjectDataset":
        """Recompute label lengths, empirical vectors and MAE from the data."""
        bounds = self.segment_bounds()
        vectors = segment_vectors(self.values, bounds, method)
        labels = []
        for lab, (lo, hi), vec in zip(self.labels, bounds, vectors):
            emp = CorrelationVector(*map(float, vec))
            labels.append(
                replace(lab, length=hi - lo, empirical=emp, mae=float(np.mean(np.abs(vec - np.asarray(lab.target)))))
            )
        return replace(self, labels=tuple(labels))

    def check(self) -> None:
        """Validate label/data consistency; raises :class:`DatasetInvariantError`."""
        ts = self.timestamps
        if ts.ndim != 1 or self.values.shape != (ts.shape[0], 3):
            raise DatasetInvariantError("timestamps and values have inconsistent shapes")
        if ts.size and np.any(np.diff(ts) <= 0):
            raise NonMonotoneTimestampsError("timestamps are not strictly increasing")
        prev_end = None
        for lab in self.labels:
            if lab.end < lab.start or (prev_end is not None and lab.start <= prev_end):
                raise SpanMismatchError(f"segment {lab.segment_id} overlaps or is out of order")
            prev_end = lab.end
        if ts.size > 1 and self.labels:
            # sparse data may leave an unobserved tail, but never longer than its widest gap
            widest = int(np.diff(ts).max())
            if ts[0] - self.labels[0].start > widest or self.labels[-1].end - ts[-1] > widest:
                raise SpanMismatchError(
                    f"labels span [{self.labels[0].start}, {self.labels[-1].end}] reaches beyond data "
                    f"span [{ts[0]}, {ts[-1]}] by more than the widest gap of {widest}"
                )
        covered = 0
        for lab, (lo, hi) in zip(self.labels, self.segment_bounds()):
            if hi - lo != lab.length:
                raise SpanMismatchError(
                    f"segment {lab.segment_id}: label length {lab.length} but {hi - lo} rows in "
                    f"[{lab.start}, {lab.end}]"
                )
            covered += hi - lo
        if covered != ts.shape[0]:
            raise SpanMismatchError(f"{ts.shape[0] - covered} rows fall outside every labelled segment")


class DatasetInvariantError(ValueError):
    pass


class NonMonotoneTimestampsError(DatasetInvariantError):
    pass


class SpanMismatchError(DatasetInvariantError):
    pass


class SparseSegmentError(ValueError):
    pass


_WORDS_A = (
    "trim", "bold", "calm", "dark", "fair", "glad", "keen", "loud", "mild", "neat", "pale", "rare",
    "safe", "tall", "vast", "warm", "wild", "wise", "blue", "cold", "deep", "fast", "gold", "high",
    "lean", "long", "pure", "rich", "slow", "soft", "true", "young",
)
_WORDS_B = (
    "fire", "moon", "rain", "tree", "wave", "wind", "rock", "leaf", "lake", "star", "snow", "sand",
    "hill", "rose", "bird", "fern", "mist", "dawn", "dusk", "glow", "reef", "pine", "sage", "tide",
    "vale", "wolf", "bear", "hawk", "lynx", "moss", "peak", "seed",
)


def subject_slug(subject_seed: int) -> str:
    r = random.Random(subject_seed)
    return f"{r.choice(_WORDS_A)}-{r.choice(_WORDS_B)}-{subject_seed % 100}"


def _streams(subject_seed: int) -> tuple[np.random.SeedSequence, ...]:
    # plan, distribution params, raw observations
    return tuple(np.random.SeedSequence(subject_seed).spawn(3))


def plan_segments(subject_seed: int, config: GenerationConfig = GenerationConfig()) -> SegmentPlan:
    ids = list(config.pattern_ids)
    k, n = len(ids), config.n_segments
    lo, hi = config.pattern_frequency
    if not (lo * k <= n <= hi * k):
        raise ValueError(
            f"{n} segments cannot use each of {k} patterns between {lo} and {hi} times"
        )
    rng = np.random.default_rng(_streams(subject_seed)[0])
    base = n // k
    counts = np.full(k, base)
    extra = n - base * k
    if extra:
        counts[rng.choice(k, size=extra, replace=False)] += 1
    order = np.repeat(np.asarray(ids), counts)
    rng.shuffle(order)
    lengths = rng.choice(np.asarray(config.segment_lengths), size=n)
    return SegmentPlan(tuple(int(i) for i in order), tuple(int(x) for x in lengths))


def draw_params(subject_seed: int, config: GenerationConfig = GenerationConfig()) -> SubjectDistributionParams:
    return SubjectDistributionParams.draw(np.random.default_rng(_streams(subject_seed)[1]), config)


def _labels_for(plan: SegmentPlan, config: GenerationConfig) -> tuple[SegmentLabel, ...]:
    labels = []
    t = EPOCH
    nan = CorrelationVector(float("nan"), float("nan"), float("nan"))
    for sid, (pid, length) in enumerate(zip(plan.pattern_ids, plan.lengths)):
        end = t + (length - 1) * config.sampling_interval
        labels.append(SegmentLabel(sid, t, end, length, pid, pt.get_pattern(pid).target(), nan, float("nan")))
        t = end + config.sampling_interval
    return tuple(labels)


def generate_raw(plan: SegmentPlan, subject_seed: int, config: GenerationConfig = GenerationConfig()) -> SubjectDataset:
    total = int(sum(plan.lengths))
    rng = np.random.default_rng(_streams(subject_seed)[2])
    values = rng.standard_normal((total, 3))
    timestamps = EPOCH + np.arange(total, dtype=np.int64) * config.sampling_interval
    ds = SubjectDataset(
        subject_id=subject_slug(subject_seed),
        stage="raw",
        completeness=100,
        timestamps=timestamps,
        values=values,
        labels=_labels_for(plan, config),
        meta={"subject_seed": subject_seed},
    )
    return ds.relabel()


def correlation_transform(pattern: pt.CanonicalPattern, source: str = "canonical") -> np.ndarray:
    """Matrix ``W`` such that ``S @ W`` carries the pattern's correlation.

    ``source='canonical'`` decomposes the {-1, 0, 1} matrix and zeroes its
    negative eigenvalues; ``'relaxed'`` decomposes the relaxed (already PSD)
    matrix so that ``W.T @ W`` reproduces it.
    """
    if not pattern.modelled:
        raise ValueError(f"pattern {pattern.id} is not modelled")
    vec = pattern.canonical if source == "canonical" else pattern.target()
    lam, u = np.linalg.eigh(vec.to_matrix())
    lam, u = lam[::-1], u[:, ::-1]
    signs = np.sign(u[np.argmax(np.abs(u), axis=0), np.arange(3)])
    u = u * signs
    lam = np.maximum(lam, 0.0)
    return (u * np.sqrt(lam)).T


def requires_clamping(pattern: pt.CanonicalPattern, source: str = "canonical") -> bool:
    vec = pattern.canonical if source == "canonical" else pattern.target()
    return bool(np.linalg.eigvalsh(vec.to_matrix())[0] < pt.PSD_TOL)


def correlate(raw: SubjectDataset, source: str = "canonical") -> SubjectDataset:
    if raw.stage != "raw":
        raise ValueError(f"correlate expects raw data, got stage {raw.stage!r}")
    out = np.empty_like(raw.values)
    transforms = {}
    for lab, (lo, hi) in zip(raw.labels, raw.segment_bounds()):
        w = transforms.get(lab.pattern_id)
        if w is None:
            w = transforms[lab.pattern_id] = correlation_transform(pt.get_pattern(lab.pattern_id), source)
        out[lo:hi] = raw.values[lo:hi] @ w
    return replace(raw, stage="correlated", values=out).relabel()


def _to_uniform(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # lower and upper tail probabilities, each accurate where it is small
    return stats.norm.cdf(z), stats.norm.sf(z)


def shift_distribution(correlated: SubjectDataset, params: SubjectDistributionParams) -> SubjectDataset:
    """Map each variate through ``F_target^{-1}(Phi(z))``; ranks are preserved."""
    if correlated.stage != "correlated":
        raise ValueError(f"shift_distribution expects correlated data, got stage {correlated.stage!r}")
    out = np.empty_like(correlated.values)
    for j, dist in enumerate(params.distributions()):
        z = correlated.values[:, j]
        lower, upper = _to_uniform(z)
        if j == 1:
            out[:, j] = dist.ppf(np.clip(lower, _U_EPS, 1 - _U_EPS))
        else:
            upper_half = z > 0
            col = np.empty_like(z)
            col[~upper_half] = dist.ppf(np.clip(lower[~upper_half], _U_EPS, 1 - _U_EPS))
            col[upper_half] = dist.isf(np.clip(upper[upper_half], _U_EPS, 1 - _U_EPS))
            out[:, j] = col
    meta = dict(correlated.meta, params=params)
    return replace(correlated, stage="non-normal", values=out, meta=meta).relabel()


def completeness_of(retain_probability: float) -> int:
    return int(round(retain_probability * 100))


def sparsify(ds: SubjectDataset, retain_probability: float, sparsify_seed: int) -> SubjectDataset:
    if ds.completeness != 100:
        raise ValueError("sparsify expects complete data")
    if not 0 < retain_probability <= 1:
        raise ValueError(f"retain probability {retain_probability} outside (0, 1]")
    if retain_probability == 1.0:
        return ds
    keep = np.random.default_rng(sparsify_seed).random(ds.n_observations) < retain_probability
    sparse = replace(
        ds,
        completeness=completeness_of(retain_probability),
        timestamps=ds.timestamps[keep],
        values=ds.values[keep],
    )
    for lab, (lo, hi) in zip(sparse.labels, sparse.segment_bounds()):
        if hi - lo < 3:
            raise SparseSegmentError(
                f"segment {lab.segment_id} keeps only {hi - lo} observations; at least 3 are required"
            )
    return sparse.relabel()


def downsample(ds: SubjectDataset, interval: int = 60) -> SubjectDataset:
    """Average observations within each ``interval``-second bucket; empty buckets vanish."""
    if ds.stage != "non-normal":
        raise ValueError(f"downsample expects non-normal data, got stage {ds.stage!r}")
    buckets = ds.timestamps // interval
    starts = np.flatnonzero(np.r_[True, buckets[1:] != buckets[:-1]])
    counts = np.diff(np.r_[starts, buckets.shape[0]])
    means = np.add.reduceat(ds.values, starts, axis=0) / counts[:, None]
    labels = tuple(
        replace(lab, start=(lab.start // interval) * interval, end=(lab.end // interval) * interval)
        for lab in ds.labels
    )
    out = replace(ds, stage="downsampled", timestamps=buckets[starts] * interval, values=means, labels=labels)
    return out.relabel()


def generate_subject(index: int, config: GenerationConfig = GenerationConfig(), stages=STAGES) -> dict:
    """All requested variants for one subject keyed by ``(stage, completeness)``."""
    seed = config.subject_seed(index)
    plan = plan_segments(seed, config)
    out = {}
    raw = generate_raw(plan, seed, config)
    complete = {"raw": raw}
    if any(s in stages for s in STAGES[1:]):
        complete["correlated"] = correlate(raw, config.transform_source)
    if any(s in stages for s in STAGES[2:]):
        complete["non-normal"] = shift_distribution(complete["correlated"], draw_params(seed, config))
    for stage in STAGES[:3]:
        if stage not in stages:
            continue
        for p in config.retention:
            out[(stage, completeness_of(p))] = sparsify(complete[stage], p, config.sparsify_seed)
    if "downsampled" in stages:
        for p in config.retention:
            nn = out.get(("non-normal", completeness_of(p))) or sparsify(
                complete["non-normal"], p, config.sparsify_seed
            )
            out[("downsampled", completeness_of(p))] = downsample(nn, config.downsample_interval)
    return out


def generate_dataset(
    config: GenerationConfig = GenerationConfig(), n_subjects: Optional[int] = None, stages=STAGES
) -> Iterator[tuple[int, dict]]:
    """Yield ``(subject_index, variants)`` for each subject of one split."""
    for i in range(config.n_subjects if n_subjects is None else n_subjects):
        yield i, generate_subject(i, config, stages)
