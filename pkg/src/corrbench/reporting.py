"""Descriptive summaries of a generated split."""
from __future__ import annotations

import warnings
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import fileio
from . import patterns as pt
from .datagen import COMPLETENESS, STAGES, SegmentLabel, SubjectDataset
from .estimators import METHODS, DegenerateBlockError, get_estimator
from .evaluation import out_of_tolerance_count

SENSITIVITY_LENGTHS = (10, 15, 20, 30, 60, 80, 100, 200, 400, 600, 800)


class MissingVariantWarning(UserWarning):
    pass


def _stats(prefix: str, x) -> dict:
    x = np.asarray(x, dtype=float)
    return {
        f"{prefix}_mean": float(x.mean()),
        f"{prefix}_sd": float(x.std(ddof=1)) if x.size > 1 else 0.0,
        f"{prefix}_min": float(x.min()),
        f"{prefix}_max": float(x.max()),
    }


def variant_summary(stage: str, completeness: int, subjects: Sequence[Sequence[SegmentLabel]]) -> dict:
    """Table-1 style row: MAE, out-of-tolerance count, segment length, observation count."""
    maes = np.concatenate([[lab.mae for lab in labs] for labs in subjects])
    lengths = np.concatenate([[lab.length for lab in labs] for labs in subjects])
    oot = [out_of_tolerance_count(labs) for labs in subjects]
    obs = [sum(lab.length for lab in labs) for labs in subjects]
    row = {"stage": stage, "completeness": completeness, "n_subjects": len(subjects)}
    row.update(_stats("mae", maes))
    row.update(_stats("oot", oot))
    row.update(_stats("length", lengths))
    row.update(_stats("obs", obs))
    return row


def load_labels(root) -> dict:
    """``{(stage, completeness): [labels per subject]}`` for every variant present."""
    out = {}
    for stage, comp, d in fileio.iter_variants(root):
        subjects = [fileio.read_labels(s / "labels.csv") for s in sorted(d.iterdir()) if (s / "labels.csv").exists()]
        if subjects:
            out[(stage, comp)] = subjects
    return out


def missing_variants(present: Iterable) -> list[str]:
    present = set(present)
    return [f"{s}_{c}" for s in STAGES for c in COMPLETENESS if (s, c) not in present]


def summarize(root) -> tuple[list[dict], list[str]]:
    labels = load_labels(root)
    order = {s: i for i, s in enumerate(STAGES)}
    rows = [
        variant_summary(stage, comp, subjects)
        for (stage, comp), subjects in sorted(labels.items(), key=lambda kv: (-kv[0][1], order.get(kv[0][0], 99)))
    ]
    missing = missing_variants(labels)
    if missing:
        warnings.warn(f"variants missing from {root}: {', '.join(missing)}", MissingVariantWarning, stacklevel=2)
    return rows, missing


def per_pattern_table(subjects: Sequence[Sequence[SegmentLabel]]) -> list[dict]:
    """Per-pattern MAE distribution and out-of-tolerance share, worst pattern first."""
    labs = [lab for s in subjects for lab in s]
    rows = []
    for pid in sorted({lab.pattern_id for lab in labs}):
        group = [lab for lab in labs if lab.pattern_id == pid]
        p = pt.get_pattern(pid)
        mae = np.array([lab.mae for lab in group])
        oot = out_of_tolerance_count(group)
        rows.append(
            {
                "pattern_id": pid,
                "relaxed": "(" + ", ".join(f"{v:g}" for v in p.target()) + ")",
                "ideal": p.ideal,
                "count": len(group),
                "median": float(np.median(mae)),
                "mean": float(mae.mean()),
                "std": float(mae.std(ddof=1)) if mae.size > 1 else 0.0,
                "q25": float(np.percentile(mae, 25)),
                "q75": float(np.percentile(mae, 75)),
                "min": float(mae.min()),
                "max": float(mae.max()),
                "oot_pct": 100.0 * oot / len(group),
            }
        )
    rows.sort(key=lambda r: -r["mean"])
    return rows


def _quartiles(prefix: str, x) -> dict:
    x = np.asarray(x, dtype=float)
    return {
        f"{prefix}_mean": float(x.mean()),
        f"{prefix}_median": float(np.median(x)),
        f"{prefix}_q25": float(np.percentile(x, 25)),
        f"{prefix}_q75": float(np.percentile(x, 75)),
    }


def measure_comparison(stage: str, completeness: int, datasets: Sequence[SubjectDataset], methods=METHODS) -> list[dict]:
    """MAE and out-of-tolerance counts of each estimator on the same segments."""
    rows = []
    for method in methods:
        relabelled = [ds.relabel(method) for ds in datasets]
        row = {"stage": stage, "completeness": completeness, "method": method}
        row.update(_quartiles("mae", np.concatenate([ds.maes() for ds in relabelled])))
        row.update(_quartiles("oot", [out_of_tolerance_count(ds) for ds in relabelled]))
        rows.append(row)
    return rows


def truncated_errors(datasets: Sequence[SubjectDataset], length: int, method: str = "spearman") -> np.ndarray:
    """MAE of each segment estimated from its first ``length`` observations only."""
    est = get_estimator(method)
    out = []
    for ds in datasets:
        for lab, (lo, hi) in zip(ds.labels, ds.segment_bounds()):
            if hi - lo < length:
                continue
            try:
                vec = np.asarray(est(ds.values[lo : lo + length]))
            except DegenerateBlockError:
                continue  # a constant column in a short prefix has no defined correlation
            out.append(np.mean(np.abs(vec - np.asarray(lab.target))))
    return np.asarray(out)


def segment_length_sensitivity(datasets: Sequence[SubjectDataset], lengths=SENSITIVITY_LENGTHS, method: str = "spearman") -> list[dict]:
    rows = []
    for length in lengths:
        err = truncated_errors(datasets, length, method)
        row = {"length": length, "n_segments": int(err.size)}
        row.update({k.replace("mae_", ""): v for k, v in _quartiles("mae", err).items()})
        rows.append(row)
    return rows


def _load_datasets(d: Path) -> list[SubjectDataset]:
    return [fileio.read_variant_dir(s) for s in sorted(d.iterdir()) if (s / "data.csv").exists()]


def report(root, out_dir, measures: bool = True) -> tuple[list[Path], list[str]]:
    """Write summary, per-pattern, measure-comparison and segment-length tables."""
    root, out_dir = Path(root), Path(out_dir)
    rows, missing = summarize(root)
    written = [fileio.write_summary_csv(rows, out_dir / "summary.csv")]
    labels = load_labels(root)
    for (stage, comp), subjects in sorted(labels.items()):
        if stage == "raw":
            continue
        written.append(fileio.write_summary_csv(per_pattern_table(subjects), out_dir / f"per_pattern_{stage}_{comp}.csv"))
    if measures:
        comparison = []
        for stage, comp, d in fileio.iter_variants(root):
            datasets = _load_datasets(d)
            if datasets:
                comparison += measure_comparison(stage, comp, datasets)
            if (stage, comp) == ("non-normal", 100) and datasets:
                written.append(
                    fileio.write_summary_csv(segment_length_sensitivity(datasets), out_dir / "segment_lengths.csv")
                )
        written.append(fileio.write_summary_csv(comparison, out_dir / "measures.csv"))
    return written, missing
