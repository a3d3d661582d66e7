"""Command line entry point: generate, degrade, validate, evaluate, wilcoxon, report."""
from __future__ import annotations

import argparse
import json
import sys
import warnings
import zlib
from pathlib import Path

import numpy as np
import pandas as pd

from . import fileio, reporting
from .datagen import STAGES, GenerationConfig, generate_subject
from .degrade import Clustering, build_suite
from .evaluation import evaluate
from .stats import bonferroni, wilcoxon_signed_rank


class CLIError(Exception):
    pass


def _config(args) -> GenerationConfig:
    split = getattr(args, "split", None) or "exploratory"
    base = GenerationConfig.for_split(split)
    return fileio.load_config(args.config, base) if args.config else base


def _out(args, default=None) -> Path:
    if args.out:
        return Path(args.out)
    if default is None:
        raise CLIError("--out is required")
    return Path(default)


def cmd_generate(args) -> dict:
    config = _config(args)
    if args.seed is not None:
        config = GenerationConfig(**{**config.as_dict(), "main_seed": args.seed})
    n = config.n_subjects if args.subjects is None else args.subjects
    stages = tuple(args.stages.split(",")) if args.stages else STAGES
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise CLIError(f"unknown stage(s) {sorted(unknown)}")
    root = _out(args) / args.split
    manifest = fileio.RunManifest(
        command="generate",
        config=config.as_dict(),
        seeds={"main": config.main_seed, "sparsify": config.sparsify_seed, "degrade": config.degrade_seed, "split": args.split},
    )
    written = []
    for i in range(n):
        for ds in generate_subject(i, config, stages).values():
            written += fileio.write_dataset(ds, root)
    manifest.record(root, written)
    path = manifest.write(root)
    return {"out": str(root), "subjects": n, "files": len(written), "manifest": str(path)}


def _suite_seed(seed: int, subject_id: str) -> list[int]:
    return [int(seed), zlib.crc32(subject_id.encode("utf-8"))]


def cmd_degrade(args) -> dict:
    src = Path(args.inp)
    dst = _out(args, src)
    seed = args.seed
    if seed is None:
        try:
            seed = fileio.RunManifest.read(src).seeds["degrade"]
        except (OSError, KeyError, ValueError):
            seed = GenerationConfig().degrade_seed
    written = []
    for stage, comp, d in fileio.iter_variants(src):
        for subject_dir in sorted(p for p in d.iterdir() if (p / "data.csv").exists()):
            ds = fileio.read_variant_dir(subject_dir, stage, comp)
            gt = Clustering.from_dataset(ds)
            suite = build_suite(gt, ds.timestamps, _suite_seed(seed, ds.subject_id))
            cache = {}
            target = fileio.variant_dir(dst, stage, comp, ds.subject_id) / "degraded"
            for i, c in enumerate(suite.clusterings):
                written.append(fileio.write_clustering(c, ds, target / f"{i:02d}.csv", cache=cache))
    if not written:
        raise CLIError(f"no variant directories with data under {src}")
    manifest = fileio.RunManifest(command="degrade", config={"in": str(src)}, seeds={"degrade": int(seed)})
    manifest.record(dst, written)
    manifest.write(dst, "degrade_manifest.json")
    return {"out": str(dst), "clusterings": len(written)}


def cmd_validate(args) -> dict:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", reporting.MissingVariantWarning)
        rows, missing = reporting.summarize(args.data)
    if not rows:
        raise CLIError(f"no generated variants under {args.data}")
    out = _out(args, Path(args.data) / "summary.csv")
    fileio.write_summary_csv(rows, out)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return {"out": str(out), "variants": len(rows), "missing": missing}


def _candidates(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise CLIError(f"no candidate CSV files in {path}")
        return files
    return [path]


def cmd_evaluate(args) -> dict:
    data_dir = Path(args.data)
    if data_dir.is_file():
        data_dir = data_dir.parent
    stage, comp = fileio.parse_variant_name(data_dir.parent.name)
    ds = fileio.read_variant_dir(data_dir, stage, comp, labels_path=args.labels)
    gt = Clustering.from_dataset(ds)
    rows = []
    for path in _candidates(Path(args.candidate)):
        cand = fileio.read_clustering(path)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = evaluate(cand, ds, gt, p_index=args.p_index, p_map=args.p_map)
        rows.append({"candidate": path.name, **report.to_row()})
    out = _out(args, "report.csv")
    fileio.write_summary_csv(rows, out)
    return {"out": str(out), "candidates": len(rows)}


def _read_column(path: str, column) -> np.ndarray:
    df = pd.read_csv(path)
    if column is None:
        numeric = df.select_dtypes("number")
        if numeric.shape[1] == 0:
            raise CLIError(f"{path} has no numeric column")
        return numeric.iloc[:, 0].to_numpy(dtype=float)
    if column not in df.columns:
        raise CLIError(f"{path} has no column {column!r}")
    return df[column].to_numpy(dtype=float)


def cmd_wilcoxon(args) -> dict:
    a = _read_column(args.a, args.column)
    b = _read_column(args.b, args.column)
    res = wilcoxon_signed_rank(a, b, alternative=args.alternative)
    level = bonferroni(args.alpha, args.bonferroni)
    row = {
        "statistic": res.statistic, "p_value": res.p_value, "n": res.n, "n_discarded": res.n_discarded,
        "method": res.method, "z": res.z, "rank_biserial": res.rank_biserial, "r": res.r,
        "cohen_d": res.cohen_d, "alpha": level, "reject": res.p_value < level,
    }
    if args.out:
        fileio.write_summary_csv([row], args.out)
    return row


def cmd_report(args) -> dict:
    out = _out(args, Path(args.data) / "report")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", reporting.MissingVariantWarning)
        written, missing = reporting.report(args.data, out, measures=not args.no_measures)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return {"out": str(out), "files": [str(p) for p in written], "missing": missing}


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="override the seed of the command")
    parser.add_argument("--config", default=default, help="flat key = value generation config")
    parser.add_argument("--out", default=default, help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrbench", description=__doc__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate one split")
    _global_flags(p, suppress=True)
    p.add_argument("--split", choices=("exploratory", "confirmatory"), default="exploratory")
    p.add_argument("--subjects", type=int, default=None)
    p.add_argument("--stages", default=None, help="comma separated subset of " + ",".join(STAGES))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("degrade", help="write 66 degraded clusterings per subject and variant")
    _global_flags(p, suppress=True)
    p.add_argument("--in", dest="inp", required=True, help="split directory")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("validate", help="per-variant descriptive summary")
    _global_flags(p, suppress=True)
    p.add_argument("--data", required=True, help="split directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="score candidate clusterings of one subject variant")
    _global_flags(p, suppress=True)
    p.add_argument("--data", required=True, help="subject variant directory (holding data.csv)")
    p.add_argument("--labels", default=None, help="ground-truth labels CSV (default: <data>/labels.csv)")
    p.add_argument("--candidate", required=True, help="candidate labels CSV or a directory of them")
    p.add_argument("--p-index", type=float, default=5.0)
    p.add_argument("--p-map", type=float, default=1.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("wilcoxon", help="paired signed-rank test between two CSV columns")
    _global_flags(p, suppress=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--column", default=None)
    p.add_argument("--alternative", choices=("two-sided", "greater", "less"), default="two-sided")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--bonferroni", type=int, default=1, help="number of tests sharing alpha")
    p.set_defaults(func=cmd_wilcoxon)

    p = sub.add_parser("report", help="summary, per-pattern, measure and segment-length tables")
    _global_flags(p, suppress=True)
    p.add_argument("--data", required=True, help="split directory")
    p.add_argument("--no-measures", action="store_true", help="skip tables that need the data files")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except Exception as exc:  # report every failure as one JSON line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "command": args.command}), file=sys.stderr)
        return 1
    print(json.dumps(result, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
