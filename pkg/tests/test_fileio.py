import json

import numpy as np
import pandas as pd
import pytest

from corrbench import fileio
from corrbench.datagen import GenerationConfig, NonMonotoneTimestampsError, SpanMismatchError
from corrbench.degrade import Clustering, misassign, shift_boundaries


@pytest.fixture
def written(tmp_path, small_subject):
    ds = small_subject[("non-normal", 70)]
    fileio.write_dataset(ds, tmp_path)
    return tmp_path, ds


def test_round_trip_is_value_identical(written):
    root, ds = written
    back = fileio.read_dataset(root, ds.subject_id, "non-normal", 70)
    assert np.array_equal(back.timestamps, ds.timestamps)
    assert np.array_equal(back.values, ds.values)
    assert back.labels == ds.labels


def test_layout_and_headers(written):
    root, ds = written
    d = root / "non-normal_70" / ds.subject_id
    assert (d / "data.csv").read_text().splitlines()[0] == "datetime,iob,cob,ig"
    assert (d / "labels.csv").read_text().splitlines()[0] == ",".join(fileio.LABEL_COLUMNS)
    assert (d / "data.csv").read_text().splitlines()[1].startswith("2017-01-01T00:00:")
    assert fileio.iter_variants(root) == [("non-normal", 70, root / "non-normal_70")]


def test_empty_dataset_rejected(small_subject, tmp_path):
    from dataclasses import replace

    ds = small_subject[("raw", 100)]
    with pytest.raises(ValueError):
        fileio.write_dataset(replace(ds, labels=()), tmp_path)


def test_shuffled_rows_fail_monotonicity(written):
    root, ds = written
    path = root / "non-normal_70" / ds.subject_id / "data.csv"
    df = pd.read_csv(path, dtype=str)
    df.sample(frac=1.0, random_state=0).to_csv(path, index=False)
    with pytest.raises(NonMonotoneTimestampsError):
        fileio.read_dataset(root, ds.subject_id, "non-normal", 70)


def test_labels_outside_span_fail(written):
    root, ds = written
    path = root / "non-normal_70" / ds.subject_id / "labels.csv"
    df = pd.read_csv(path, dtype=str)
    df.loc[len(df) - 1, "end_datetime"] = "2030-01-01T00:00:00Z"
    df.to_csv(path, index=False)
    with pytest.raises(SpanMismatchError):
        fileio.read_dataset(root, ds.subject_id, "non-normal", 70)


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda df: df.drop(columns=["cob"]),
        lambda df: df.assign(iob="abc"),
        lambda df: df.assign(datetime="yesterday"),
    ],
)
def test_schema_errors(written, corrupt):
    root, ds = written
    path = root / "non-normal_70" / ds.subject_id / "data.csv"
    corrupt(pd.read_csv(path, dtype=str)).to_csv(path, index=False)
    with pytest.raises(fileio.SchemaError):
        fileio.read_dataset(root, ds.subject_id, "non-normal", 70)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        fileio.read_dataset(tmp_path, "nobody", "raw", 100)


def test_clustering_round_trip(tmp_path, small_subject):
    ds = small_subject[("correlated", 100)]
    gt = Clustering.from_dataset(ds)
    c = misassign(shift_boundaries(gt, ds.timestamps, 37), 5, 2)
    path = fileio.write_clustering(c, ds, tmp_path / "c.csv")
    back = fileio.read_clustering(path)
    for name in ("segment_ids", "starts", "ends", "cluster_ids"):
        assert np.array_equal(getattr(back, name), getattr(c, name))
    assert (back.provenance, back.k, back.m) == ("misassigned", 0, 5)


def test_external_clustering_file(tmp_path):
    path = tmp_path / "ext.csv"
    path.write_text("start_datetime,end_datetime,cluster_id\n2017-01-01T00:00:00Z,2017-01-01T00:00:09Z,3\n")
    c = fileio.read_clustering(path)
    assert c.provenance == "external" and c.cluster_ids.tolist() == [3]
    path.write_text("start_datetime,end_datetime\n2017-01-01T00:00:00Z,2017-01-01T00:00:09Z\n")
    with pytest.raises(fileio.SchemaError):
        fileio.read_clustering(path)


def test_ground_truth_labels_read_as_clustering(written):
    root, ds = written
    c = fileio.read_clustering(root / "non-normal_70" / ds.subject_id / "labels.csv")
    assert c.provenance == "ground_truth"
    assert np.array_equal(c.cluster_ids, ds.pattern_ids())


def test_config_parse_and_dump():
    text = "# tiny\nn_subjects = 3\npattern_ids = 0, 13, 25  # three\nretention = 1.0, 0.5, 0.2\ntransform_source = relaxed\n"
    c = fileio.parse_config(text)
    assert c.n_subjects == 3 and c.pattern_ids == (0, 13, 25)
    assert c.retention == (1.0, 0.5, 0.2) and c.transform_source == "relaxed"
    assert fileio.parse_config(fileio.dump_config(c)) == c


@pytest.mark.parametrize("text", ["colour = red", "n_subjects 3", "n_subjects = many", "pattern_ids = 14"])
def test_config_errors(text):
    with pytest.raises(ValueError):
        fileio.parse_config(text)


def test_manifest(tmp_path, written):
    root, ds = written
    m = fileio.RunManifest(command="generate", config=GenerationConfig().as_dict(), seeds={"main": 1})
    m.record(root, sorted(root.rglob("*.csv")))
    path = m.write(root)
    payload = json.loads(path.read_text())
    assert payload["digests"] == fileio.tree_digests(root)
    assert payload["config"]["segment_lengths"][0] == 900
    assert fileio.RunManifest.read(root).digests == m.digests


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, -2.5e-300, 123456789.123):
        assert float(fileio.fmt(x)) == x
    assert fileio.fmt(float("nan")) == ""


def test_summary_csv(tmp_path):
    path = fileio.write_summary_csv([{"a": 1, "b": 0.5}, {"a": 2, "b": float("nan")}], tmp_path / "s.csv")
    assert path.read_text() == "a,b\n1,0.5\n2,\n"
