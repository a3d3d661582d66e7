"""Paired-sample tests and split comparison."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

ZERO_DIFF = 1e-8
# exact null is O(n^3); beyond this the normal approximation is accurate anyway
EXACT_MAX_N = 400
ALTERNATIVES = ("two-sided", "greater", "less")


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of positive differences
    p_value: float
    n: int
    n_discarded: int
    method: str
    z: float
    rank_biserial: float
    r: float
    cohen_d: float

    @property
    def effect_size(self) -> float:
        return self.rank_biserial


def signed_rank_null(n: int) -> np.ndarray:
    """P(W+ = s) for s = 0..n(n+1)/2 when all ranks 1..n are distinct."""
    dist = np.zeros(n * (n + 1) // 2 + 1)
    dist[0] = 1.0
    top = 0
    for r in range(1, n + 1):
        top += r
        # each rank enters W+ with probability 1/2
        dist[r : top + 1] = 0.5 * (dist[r : top + 1] + dist[: top + 1 - r])
        dist[:r] *= 0.5
    return dist


def _tail(dist: np.ndarray, w: float, alternative: str) -> float:
    s = np.arange(dist.size)
    upper = dist[s >= w - 1e-9].sum()
    lower = dist[s <= w + 1e-9].sum()
    if alternative == "greater":
        return float(min(1.0, upper))
    if alternative == "less":
        return float(min(1.0, lower))
    return float(min(1.0, 2.0 * min(upper, lower)))


def wilcoxon_signed_rank(x, y=None, alternative: str = "two-sided", zero_tol: float = ZERO_DIFF) -> WilcoxonResult:
    """Wilcoxon signed-rank test on ``x - y`` (or on ``x`` as differences).

    Differences with magnitude below ``zero_tol`` are discarded before ranking.
    The p-value is exact when the remaining magnitudes are tie-free, otherwise
    it uses the tie-corrected normal approximation.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    x = np.asarray(x, dtype=float)
    if y is not None and x.shape != np.shape(y):
        raise ValueError("paired samples differ in length")
    d = x if y is None else x - np.asarray(y, dtype=float)
    if not np.all(np.isfinite(d)):
        raise ValueError("paired samples contain non-finite values")
    keep = np.abs(d) >= zero_tol
    d = d[keep]
    n = d.size
    if n == 0:
        raise ValueError("all paired differences are zero; test undefined")
    if n < 5:
        raise ValueError(f"only {n} non-zero differences; at least 5 are required")

    mag = np.abs(d)
    ranks = stats.rankdata(mag)
    w_plus = float(ranks[d > 0].sum())
    total = n * (n + 1) / 2
    mean = total / 2
    _, tie_counts = np.unique(mag, return_counts=True)
    ties = bool(np.any(tie_counts > 1))
    var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(tie_counts**3 - tie_counts) / 48
    z = (w_plus - mean) / np.sqrt(var) if var > 0 else 0.0

    if not ties and n <= EXACT_MAX_N:
        p = _tail(signed_rank_null(n), w_plus, alternative)
        method = "exact"
    else:
        if alternative == "greater":
            p = stats.norm.sf(z)
        elif alternative == "less":
            p = stats.norm.cdf(z)
        else:
            p = 2 * stats.norm.sf(abs(z))
        p = float(min(1.0, p))
        method = "normal"

    sd = d.std(ddof=1)
    return WilcoxonResult(
        statistic=w_plus,
        p_value=p,
        n=n,
        n_discarded=int((~keep).sum()),
        method=method,
        z=float(z),
        rank_biserial=float((2 * w_plus - total) / total),
        r=float(z / np.sqrt(n)),
        cohen_d=float(d.mean() / sd) if sd > 0 else float("inf") * np.sign(d.mean()),
    )


def bonferroni(alpha: float, n_tests: int) -> float:
    if n_tests < 1:
        raise ValueError("need at least one test")
    return alpha / n_tests


def bonferroni_reject(p_values: Sequence[float], alpha: float = 0.05) -> list[bool]:
    level = bonferroni(alpha, len(p_values))
    return [p < level for p in p_values]


@dataclass(frozen=True)
class SplitComparison:
    measure: str
    r: float
    p: float
    mean: tuple[float, float]
    median: tuple[float, float]
    q25: tuple[float, float]
    q75: tuple[float, float]

    def independent(self, max_abs_r: float = 0.05, alpha: float = 0.05) -> bool:
        return abs(self.r) < max_abs_r and self.p > alpha

    def medians_equal(self, decimals: Optional[int] = None) -> bool:
        a, b = self.median
        if decimals is not None:
            a, b = round(a, decimals), round(b, decimals)
        return a == b


def compare_splits(measure: str, a, b) -> SplitComparison:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"{measure}: paired sequences differ in length ({a.size} vs {b.size})")
    res = stats.spearmanr(a, b)
    pair = lambda f: (float(f(a)), float(f(b)))  # noqa: E731
    return SplitComparison(
        measure=measure,
        r=float(res.statistic),
        p=float(res.pvalue),
        mean=pair(np.mean),
        median=pair(np.median),
        q25=pair(lambda v: np.percentile(v, 25)),
        q75=pair(lambda v: np.percentile(v, 75)),
    )


def split_consistency(exploratory: Mapping[str, Sequence[float]], confirmatory: Mapping[str, Sequence[float]]) -> list[SplitComparison]:
    """Independence (Spearman r, p) and location/spread summaries per measure."""
    missing = set(exploratory) ^ set(confirmatory)
    if missing:
        raise ValueError(f"measures present in only one split: {sorted(missing)}")
    return [compare_splits(name, exploratory[name], confirmatory[name]) for name in exploratory]
