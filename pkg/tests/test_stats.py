import itertools
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from corrbench.stats import (
    bonferroni,
    bonferroni_reject,
    compare_splits,
    signed_rank_null,
    split_consistency,
    wilcoxon_signed_rank,
)


def enumerated_p(d, alternative):
    """p-value by enumerating all 2^n sign assignments of the ranks."""
    ranks = sps.rankdata(np.abs(d))
    observed = ranks[d > 0].sum()
    sums = np.array([sum(r for r, s in zip(ranks, signs) if s) for signs in itertools.product((0, 1), repeat=len(d))])
    upper = np.mean(sums >= observed - 1e-9)
    lower = np.mean(sums <= observed + 1e-9)
    if alternative == "greater":
        return upper
    if alternative == "less":
        return lower
    return min(1.0, 2 * min(upper, lower))


@pytest.mark.parametrize("n", range(5, 13))
@pytest.mark.parametrize("alternative", ["two-sided", "greater", "less"])
def test_exact_matches_enumeration(n, alternative):
    rng = np.random.default_rng(n)
    d = rng.standard_normal(n) + 0.3
    res = wilcoxon_signed_rank(d, alternative=alternative)
    assert res.method == "exact"
    assert res.p_value == pytest.approx(enumerated_p(d, alternative), abs=1e-12)


@pytest.mark.parametrize("n", [5, 8, 20])
def test_exact_matches_scipy(n):
    rng = np.random.default_rng(7)
    x, y = rng.standard_normal(n), rng.standard_normal(n)
    ours = wilcoxon_signed_rank(x, y)
    ref = sps.wilcoxon(x, y, method="exact")
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-10)


def test_all_positive_five():
    res = wilcoxon_signed_rank([1.0, 2.0, 3.0, 4.0, 5.0], alternative="greater")
    assert res.p_value == pytest.approx(1 / 32)
    assert res.statistic == 15
    assert res.rank_biserial == 1.0


@given(st.integers(1, 60))
def test_null_is_symmetric_distribution(n):
    dist = signed_rank_null(n)
    assert dist.size == n * (n + 1) // 2 + 1
    assert dist.sum() == pytest.approx(1.0)
    assert np.allclose(dist, dist[::-1])


def test_identical_sequences_rejected():
    x = np.arange(10.0)
    with pytest.raises(ValueError, match="zero"):
        wilcoxon_signed_rank(x, x.copy())


def test_too_few_nonzero_differences():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0, 2.0, 0.0, 0.0, -1.0, 0.0])


def test_tiny_differences_discarded():
    d = np.array([1e-10, 1.0, 2.0, -3.0, 4.0, 5.0, 6.0])
    res = wilcoxon_signed_rank(d)
    assert (res.n, res.n_discarded) == (6, 1)


def test_ties_use_normal_approximation():
    d = np.array([1.0, 1.0, 2.0, 2.0, -3.0, 4.0, 4.0, 5.0])
    res = wilcoxon_signed_rank(d)
    assert res.method == "normal"
    ref = sps.wilcoxon(d, method="approx", correction=False, zero_method="wilcox")
    assert res.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_large_shift_n30_fast():
    rng = np.random.default_rng(3)
    a = rng.normal(0.73, 0.1, 30)
    b = rng.normal(-0.15, 0.1, 30)
    t0 = time.perf_counter()
    res = wilcoxon_signed_rank(a, b)
    assert time.perf_counter() - t0 < 1.0
    assert res.p_value < 1e-4
    assert res.p_value < bonferroni(0.05, 3)


def test_effect_sizes_signs():
    rng = np.random.default_rng(4)
    d = rng.normal(-1, 1, 40)
    res = wilcoxon_signed_rank(d)
    assert res.rank_biserial < 0 and res.r < 0 and res.cohen_d < 0
    assert res.r == pytest.approx(res.z / np.sqrt(res.n))


def test_bad_alternative_and_shape():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(np.ones(6), alternative="bigger")
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(np.ones(6), np.ones(5))


def test_bonferroni():
    assert bonferroni(0.05, 3) == pytest.approx(0.05 / 3)
    assert bonferroni_reject([0.01, 0.02, 0.001]) == [True, False, True]
    with pytest.raises(ValueError):
        bonferroni(0.05, 0)


def test_split_self_comparison():
    x = np.random.default_rng(1).uniform(size=200)
    c = compare_splits("x", x, x)
    assert c.r == pytest.approx(1.0)
    assert c.medians_equal()


def test_split_independent_noise():
    rng = np.random.default_rng(2)
    c = compare_splits("noise", rng.uniform(size=3000), rng.uniform(size=3000))
    assert abs(c.r) < 0.05


def test_medians_equal_at_precision():
    c = compare_splits("m", [0.021, 0.019, 0.02], [0.0204, 0.0196, 0.0199])
    assert not c.medians_equal()
    assert c.medians_equal(decimals=2)


def test_split_consistency_requires_same_measures():
    with pytest.raises(ValueError):
        split_consistency({"a": [1, 2, 3]}, {"b": [1, 2, 3]})
    with pytest.raises(ValueError):
        compare_splits("a", [1, 2, 3], [1, 2])
