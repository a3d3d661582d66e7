from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from corrbench import patterns as pt
from corrbench.datagen import (
    COMPLETENESS,
    STAGES,
    GenerationConfig,
    SparseSegmentError,
    correlation_transform,
    downsample,
    draw_params,
    generate_dataset,
    plan_segments,
    requires_clamping,
    shift_distribution,
    sparsify,
)
from corrbench.estimators import spearman

LENGTH_MENU = (900, 1200, 1800, 3600, 7200, 10800, 14400, 18000, 21600, 28800, 36000)


@pytest.mark.parametrize("seed", [0, 666, 2024])
def test_plan_uses_each_pattern_four_or_five_times(seed):
    plan = plan_segments(seed)
    assert len(plan) == 100
    counts = Counter(plan.pattern_ids)
    assert set(counts) == set(pt.MODELLED_IDS)
    assert set(counts.values()) <= {4, 5}
    assert set(plan.lengths) <= set(LENGTH_MENU)


def test_plan_92_segments_forces_four_each():
    counts = Counter(plan_segments(5, GenerationConfig(n_segments=92)).pattern_ids)
    assert set(counts.values()) == {4}


def test_plan_deterministic():
    assert plan_segments(11) == plan_segments(11)
    assert plan_segments(11) != plan_segments(12)


def test_plan_rejects_infeasible_frequency():
    with pytest.raises(ValueError):
        plan_segments(0, GenerationConfig(n_segments=200))


def test_observation_count_matches_length_menu():
    # per-subject totals scatter widely; the mean over a split sits near 100 * mean(menu)
    config = GenerationConfig.for_split("exploratory")
    totals = [sum(plan_segments(config.subject_seed(i), config).lengths) for i in range(30)]
    expected = 100 * np.mean(LENGTH_MENU)
    sd_of_mean = 100 * np.std(LENGTH_MENU) / np.sqrt(100 * 30)
    assert abs(np.mean(totals) - expected) < 4 * sd_of_mean


@pytest.mark.parametrize(
    "kwargs",
    [
        {"segment_lengths": (90,)},
        {"retention": (1.0, 0.0, 0.1)},
        {"pattern_ids": (0, 14)},
        {"transform_source": "nearest"},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        GenerationConfig(**kwargs)


def test_split_seeds_differ():
    a, b = GenerationConfig.for_split("exploratory"), GenerationConfig.for_split("confirmatory")
    assert a.main_seed != b.main_seed
    with pytest.raises(ValueError):
        GenerationConfig.for_split("holdout")


def test_raw_moments(small_subject):
    raw = small_subject[("raw", 100)]
    assert np.all(np.abs(raw.values.mean(axis=0)) < 0.05)
    assert np.all(np.abs(raw.values.var(axis=0) - 1) < 0.05)
    assert abs(raw.maes().mean() - 0.51) < 0.05
    assert np.all(np.diff(raw.timestamps) == 1)


def test_transform_identity_for_pattern_0():
    w = correlation_transform(pt.get_pattern(0))
    assert np.allclose(w.T @ w, np.eye(3), atol=1e-12)


def test_transform_all_ones_for_pattern_13():
    w = correlation_transform(pt.get_pattern(13))
    assert np.allclose(w.T @ w, np.ones((3, 3)), atol=1e-12)


@pytest.mark.parametrize("pid", pt.MODELLED_IDS)
def test_relaxed_transform_reproduces_matrix(pid):
    p = pt.get_pattern(pid)
    w = correlation_transform(p, source="relaxed")
    assert np.allclose(w.T @ w, p.relaxed.to_matrix(), atol=1e-9)
    assert not requires_clamping(p, "relaxed")


def test_canonical_clamping_only_for_non_ideal():
    for p in pt.modelled_patterns():
        assert requires_clamping(p) == (not p.ideal)


def test_transform_rejects_unmodelled():
    with pytest.raises(ValueError):
        correlation_transform(pt.get_pattern(22))


def test_correlated_fidelity(small_subject):
    cor = small_subject[("correlated", 100)]
    maes = cor.maes()
    assert 0.01 <= maes.mean() <= 0.04 and maes.max() <= 0.10
    zero = cor.empirical()[cor.pattern_ids() == 0]
    assert np.all(np.abs(zero) < 0.2)


def test_shift_preserves_gev_ranks(small_subject, small_config):
    cor = small_subject[("correlated", 100)]
    nn = small_subject[("non-normal", 100)]
    assert np.array_equal(np.argsort(cor.values[:, 0]), np.argsort(nn.values[:, 0]))
    assert np.array_equal(np.argsort(cor.values[:, 2]), np.argsort(nn.values[:, 2]))
    lo, hi = cor.segment_bounds()[0]
    # r13 involves only the continuous GEV columns
    assert spearman(cor.values[lo:hi])[1] == pytest.approx(spearman(nn.values[lo:hi])[1], abs=1e-12)
    assert abs(nn.maes().mean() - cor.maes().mean()) < 0.01


def test_nonnormal_marginals(small_subject, small_config):
    nn = small_subject[("non-normal", 100)]
    cob = nn.values[:, 1]
    assert np.all(cob >= 0) and np.all(cob == np.round(cob))
    params = draw_params(small_config.subject_seed(0), small_config)
    lo, hi = small_config.v3_loc
    assert lo - 5 * small_config.v3_scale[1] < np.median(nn.values[:, 2]) < hi + 5 * small_config.v3_scale[1]
    assert small_config.v2_p[0] <= params.v2_p <= small_config.v2_p[1]


def test_shift_requires_correlated(small_subject, small_config):
    with pytest.raises(ValueError):
        shift_distribution(small_subject[("raw", 100)], draw_params(0, small_config))


@pytest.mark.parametrize("comp, mean_gap, median_gap", [(70, (1.35, 1.55), None), (10, (9, 11), (6, 8))])
def test_sparsity_gaps(small_subject, comp, mean_gap, median_gap):
    gaps = np.diff(small_subject[("non-normal", comp)].timestamps)
    assert mean_gap[0] <= gaps.mean() <= mean_gap[1]
    if median_gap:
        assert median_gap[0] <= np.median(gaps) <= median_gap[1]


def test_sparsify_identity_and_checks(small_subject):
    full = small_subject[("correlated", 100)]
    assert sparsify(full, 1.0, 3) is full
    with pytest.raises(ValueError):
        sparsify(small_subject[("correlated", 70)], 0.5, 3)
    with pytest.raises(SparseSegmentError):
        sparsify(full, 0.0005, 3)


def test_every_variant_is_consistent(small_subject):
    assert set(small_subject) == {(s, c) for s in STAGES for c in COMPLETENESS}
    for ds in small_subject.values():
        ds.check()
        assert len(ds.labels) == 46


def test_downsample_constant_buckets(small_subject, rng):
    nn = small_subject[("non-normal", 100)]
    buckets = nn.timestamps // 60
    level = rng.standard_normal((buckets.max() - buckets.min() + 1, 3))
    down = downsample(replace(nn, values=level[buckets - buckets.min()]))
    assert np.allclose(down.values, level[down.timestamps // 60 - buckets.min()], rtol=0, atol=1e-12)
    assert np.all(down.timestamps % 60 == 0)
    assert down.n_observations == nn.n_observations // 60


def test_downsampled_lengths(small_subject):
    down = small_subject[("downsampled", 100)]
    assert sorted({lab.length for lab in down.labels}) == [10, 15, 20]
    sparse = small_subject[("downsampled", 10)]
    assert sum(lab.length for lab in sparse.labels) == sparse.n_observations


def test_generate_dataset_deterministic(small_config):
    a = dict(generate_dataset(small_config, n_subjects=1, stages=("raw",)))
    b = dict(generate_dataset(small_config, n_subjects=1, stages=("raw",)))
    assert np.array_equal(a[0][("raw", 100)].values, b[0][("raw", 100)].values)
    assert set(a[0]) == {("raw", c) for c in COMPLETENESS}
