"""CSV persistence, run manifests and flat config files.

Layout under a split directory::

    <stage>_<completeness>/<subject_id>/data.csv
    <stage>_<completeness>/<subject_id>/labels.csv
    <stage>_<completeness>/<subject_id>/degraded/<index>.csv
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from . import __version__
from . import patterns as pt
from .datagen import GenerationConfig, SegmentLabel, SubjectDataset
from .degrade import Clustering
from .estimators import DegenerateBlockError, get_estimator
from .patterns import CorrelationVector

DATA_COLUMNS = ("datetime", "iob", "cob", "ig")
LABEL_COLUMNS = (
    "subject_id", "segment_id", "start_datetime", "end_datetime", "length", "pattern_id",
    "target_r12", "target_r13", "target_r23", "empirical_r12", "empirical_r13", "empirical_r23", "mae",
)
DEGRADED_COLUMNS = LABEL_COLUMNS + ("provenance", "k", "m")
MANIFEST_NAME = "manifest.json"


class SchemaError(ValueError):
    """A CSV file lacks required columns or holds unparseable values."""


def fmt(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    x = float(x)
    return "" if np.isnan(x) else repr(x)


def format_datetimes(ts: np.ndarray) -> np.ndarray:
    return np.char.add(np.datetime_as_string(np.asarray(ts, dtype="datetime64[s]"), unit="s"), "Z")


def parse_datetimes(values, path) -> np.ndarray:
    try:
        parsed = pd.to_datetime(pd.Series(values), format="%Y-%m-%dT%H:%M:%SZ", utc=True)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}: bad datetime value ({exc})") from None
    return (parsed.astype("int64") // 10**9).to_numpy(dtype=np.int64)


def variant_dir(root, stage: str, completeness: int, subject_id: Optional[str] = None) -> Path:
    d = Path(root) / f"{stage}_{completeness}"
    return d / subject_id if subject_id else d


def _write_lines(path: Path, header: Iterable[str], rows: Iterable[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(row)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def _label_fields(subject_id: str, lab: SegmentLabel) -> list[str]:
    start, end = format_datetimes(np.array([lab.start, lab.end]))
    return [
        subject_id, str(lab.segment_id), start, end, str(lab.length), str(lab.pattern_id),
        *map(fmt, lab.target), *map(fmt, lab.empirical), fmt(lab.mae),
    ]


def write_dataset(ds: SubjectDataset, root) -> tuple[Path, Path]:
    """Write ``data.csv`` and ``labels.csv`` for one variant under ``root``."""
    if ds.n_observations == 0 or not ds.labels:
        raise ValueError(f"refusing to write empty dataset {ds.subject_id} {ds.variant}")
    out = variant_dir(root, ds.stage, ds.completeness, ds.subject_id)
    stamps = format_datetimes(ds.timestamps)
    vals = ds.values.tolist()
    data = _write_lines(
        out / "data.csv",
        DATA_COLUMNS,
        (f"{t},{a!r},{b!r},{c!r}\n" for t, (a, b, c) in zip(stamps, vals)),
    )
    labels = _write_lines(
        out / "labels.csv",
        LABEL_COLUMNS,
        (",".join(_label_fields(ds.subject_id, lab)) + "\n" for lab in ds.labels),
    )
    return data, labels


def _read_csv(path: Path, required) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"{path} does not exist")
    try:
        df = pd.read_csv(path, float_precision="round_trip", dtype={"subject_id": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from None
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {missing}")
    return df


def _numeric(df: pd.DataFrame, cols, path, kind=float) -> np.ndarray:
    try:
        arr = df[list(cols)].to_numpy(dtype=float)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}: non-numeric value in {list(cols)} ({exc})") from None
    if kind is int:
        if np.isnan(arr).any() or np.any(arr != np.round(arr)):
            raise SchemaError(f"{path}: non-integer value in {list(cols)}")
        return arr.astype(np.int64)
    return arr


def read_labels(path) -> list[SegmentLabel]:
    path = Path(path)
    df = _read_csv(path, LABEL_COLUMNS)
    ints = _numeric(df, ("segment_id", "length", "pattern_id"), path, int)
    floats = _numeric(df, LABEL_COLUMNS[6:], path)
    starts = parse_datetimes(df["start_datetime"], path)
    ends = parse_datetimes(df["end_datetime"], path)
    labels = []
    for i in range(len(df)):
        labels.append(
            SegmentLabel(
                segment_id=int(ints[i, 0]),
                start=int(starts[i]),
                end=int(ends[i]),
                length=int(ints[i, 1]),
                pattern_id=int(ints[i, 2]),
                target=CorrelationVector(*map(float, floats[i, 0:3])),
                empirical=CorrelationVector(*map(float, floats[i, 3:6])),
                mae=float(floats[i, 6]),
            )
        )
    return labels


def read_data(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    df = _read_csv(path, DATA_COLUMNS)
    ts = parse_datetimes(df["datetime"], path)
    values = _numeric(df, DATA_COLUMNS[1:], path)
    return ts, values


def read_dataset(root, subject_id: str, stage: str, completeness: int) -> SubjectDataset:
    """Load one variant and validate it; raises a distinct error per failure kind."""
    d = variant_dir(root, stage, completeness, subject_id)
    return read_variant_dir(d, stage, completeness)


def read_variant_dir(d, stage: Optional[str] = None, completeness: Optional[int] = None, labels_path=None) -> SubjectDataset:
    d = Path(d)
    if stage is None or completeness is None:
        stage, completeness = parse_variant_name(d.parent.name)
    ts, values = read_data(d / "data.csv")
    labels = read_labels(d / "labels.csv" if labels_path is None else labels_path)
    ds = SubjectDataset(
        subject_id=d.name,
        stage=stage,
        completeness=int(completeness),
        timestamps=ts,
        values=values,
        labels=tuple(labels),
    )
    ds.check()
    return ds


def parse_variant_name(name: str) -> tuple[str, int]:
    stage, _, comp = name.rpartition("_")
    if not stage or not comp.isdigit():
        raise SchemaError(f"directory {name!r} is not named <stage>_<completeness>")
    return stage, int(comp)


def iter_variants(root) -> list[tuple[str, int, Path]]:
    """``(stage, completeness, dir)`` for every variant directory under a split root."""
    out = []
    for d in sorted(Path(root).iterdir()):
        if d.is_dir():
            try:
                stage, comp = parse_variant_name(d.name)
            except SchemaError:
                continue
            out.append((stage, comp, d))
    return out


# degraded / candidate clusterings


def clustering_rows(clustering: Clustering, ds: SubjectDataset, method: str = "spearman", cache: Optional[dict] = None) -> list[str]:
    est = get_estimator(method)
    cache = {} if cache is None else cache
    rows = []
    bounds = clustering.bounds(ds.timestamps)
    stamps = format_datetimes(np.r_[clustering.starts, clustering.ends])
    n = clustering.n_segments
    for i, (lo, hi) in enumerate(bounds):
        vec = cache.get((lo, hi))
        if vec is None:
            try:
                vec = np.asarray(est(ds.values[lo:hi]), dtype=float)
            except DegenerateBlockError:
                vec = np.full(3, np.nan)
            cache[(lo, hi)] = vec
        pid = int(clustering.cluster_ids[i])
        pattern = pt.get_pattern(pid) if 0 <= pid < 27 else None
        target = np.asarray(pattern.target()) if pattern is not None and pattern.modelled else np.full(3, np.nan)
        err = float(np.mean(np.abs(vec - target)))
        rows.append(
            ",".join(
                [
                    ds.subject_id, str(int(clustering.segment_ids[i])), stamps[i], stamps[n + i], str(hi - lo),
                    str(pid), *map(fmt, target), *map(fmt, vec), fmt(err),
                    clustering.provenance, str(clustering.k), str(clustering.m),
                ]
            )
            + "\n"
        )
    return rows


def write_clustering(clustering: Clustering, ds: SubjectDataset, path, method: str = "spearman", cache=None) -> Path:
    return _write_lines(Path(path), DEGRADED_COLUMNS, clustering_rows(clustering, ds, method, cache))


def read_clustering(path) -> Clustering:
    """Read a ground-truth, degraded or external labels file as a :class:`Clustering`.

    External files need only ``start_datetime,end_datetime`` and a
    ``pattern_id`` or ``cluster_id`` column.
    """
    path = Path(path)
    df = _read_csv(path, ("start_datetime", "end_datetime"))
    id_col = "pattern_id" if "pattern_id" in df.columns else "cluster_id"
    if id_col not in df.columns:
        raise SchemaError(f"{path}: needs a pattern_id or cluster_id column")
    ids = _numeric(df, (id_col,), path, int)[:, 0]
    seg_ids = _numeric(df, ("segment_id",), path, int)[:, 0] if "segment_id" in df.columns else np.arange(len(df))
    if "provenance" in df.columns:
        provenance = str(df["provenance"].iloc[0])
        k = int(df["k"].iloc[0]) if "k" in df.columns else 0
        m = int(df["m"].iloc[0]) if "m" in df.columns else 0
    else:
        provenance = "ground_truth" if id_col == "pattern_id" and "empirical_r12" in df.columns else "external"
        k = m = 0
    try:
        return Clustering(
            segment_ids=seg_ids,
            starts=parse_datetimes(df["start_datetime"], path),
            ends=parse_datetimes(df["end_datetime"], path),
            cluster_ids=ids,
            provenance=provenance,
            k=k,
            m=m,
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


# manifest


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: dict
    version: str = __version__
    digests: dict = field(default_factory=dict)
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def record(self, root, paths: Iterable) -> None:
        root = Path(root)
        for p in paths:
            p = Path(p)
            self.digests[p.relative_to(root).as_posix()] = sha256_of(p)

    def write(self, root, name: str = MANIFEST_NAME) -> Path:
        path = Path(root) / name
        payload = {k: _jsonable(v) for k, v in dataclasses.asdict(self).items()}
        payload["config"] = {k: _jsonable(v) for k, v in self.config.items()}
        payload["digests"] = dict(sorted(self.digests.items()))
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)
        return path

    @classmethod
    def read(cls, root) -> "RunManifest":
        payload = json.loads((Path(root) / MANIFEST_NAME).read_text(encoding="utf-8"))
        return cls(**payload)


def tree_digests(root) -> dict:
    """sha256 of every CSV below ``root`` keyed by relative path."""
    root = Path(root)
    return {p.relative_to(root).as_posix(): sha256_of(p) for p in sorted(root.rglob("*.csv"))}


# flat key = value config


def _parse_value(raw: str, default, key: str):
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            elem = type(default[0]) if default else float
            return tuple(elem(v.strip()) for v in raw.strip("()[]").split(",") if v.strip())
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.lower() == "true"
        return type(default)(raw)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {raw!r}") from None


def parse_config(text: str, base: GenerationConfig = GenerationConfig()) -> GenerationConfig:
    """Apply ``key = value`` lines (``#`` comments allowed) over ``base``."""
    defaults = base.as_dict()
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"config line {lineno}: expected key = value")
        if key not in defaults:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        updates[key] = _parse_value(value, defaults[key], key)
    return dataclasses.replace(base, **updates)


def load_config(path, base: GenerationConfig = GenerationConfig()) -> GenerationConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def dump_config(config: GenerationConfig) -> str:
    lines = []
    for key, value in config.as_dict().items():
        if isinstance(value, tuple):
            value = ", ".join(map(str, value))
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def write_summary_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("", encoding="utf-8")
        return path
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: fmt(v) if isinstance(v, float) else v for k, v in row.items()})
    return path

