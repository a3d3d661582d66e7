import json
import subprocess
import sys

import pandas as pd
import pytest

from corrbench import fileio
from corrbench.cli import main

TINY = "n_subjects = 1\nn_segments = 6\npattern_ids = 0, 13, 25\npattern_frequency = 2, 2\nsegment_lengths = 600, 900\n"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def tree(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.cfg"
    cfg.write_text(TINY)
    assert main(["generate", "--config", str(cfg), "--out", str(root / "out"), "--stages", "correlated,non-normal"]) == 0
    split = root / "out" / "exploratory"
    assert main(["degrade", "--in", str(split)]) == 0
    return split


def test_generate_tree(tree):
    variants = sorted(p.name for p in tree.iterdir() if p.is_dir())
    assert variants == [f"{s}_{c}" for s in ("correlated", "non-normal") for c in (10, 100, 70)]
    manifest = fileio.RunManifest.read(tree)
    assert manifest.command == "generate" and manifest.config["n_segments"] == 6
    assert {k: v for k, v in fileio.tree_digests(tree).items() if "degraded" not in k} == manifest.digests


def test_degrade_writes_66_per_variant(tree):
    files = sorted(tree.glob("correlated_100/*/degraded/*.csv"))
    assert len(files) == 66
    header = files[0].read_text().splitlines()[0]
    assert header.endswith("provenance,k,m")
    assert (tree / "degrade_manifest.json").exists()


def test_validate(tree, capsys):
    code, out, err = run(capsys, "validate", "--data", str(tree))
    assert code == 0
    payload = json.loads(out)
    assert payload["variants"] == 6 and "raw_100" in payload["missing"]
    assert "warning" in err
    summary = pd.read_csv(payload["out"])
    assert set(summary["stage"]) == {"correlated", "non-normal"}


def test_evaluate_directory_of_candidates(tree, capsys, tmp_path):
    subject = next((tree / "correlated_100").iterdir())
    out_csv = tmp_path / "report.csv"
    code, out, _ = run(capsys, "evaluate", "--data", str(subject), "--candidate", str(subject / "degraded"), "--out", str(out_csv))
    assert code == 0 and json.loads(out)["candidates"] == 66
    report = pd.read_csv(out_csv)
    assert report["jaccard"].between(0, 1).all()
    code, _, _ = run(capsys, "evaluate", "--data", str(subject), "--candidate", str(subject / "labels.csv"), "--out", str(out_csv))
    row = pd.read_csv(out_csv).iloc[0]
    assert row["jaccard"] == 1.0 and row["pattern_discovery_pct"] == 100.0


def test_wilcoxon(tmp_path, capsys):
    pd.DataFrame({"swc": [0.1, 0.3, 0.5, 0.7, 0.9, 1.1]}).to_csv(tmp_path / "a.csv", index=False)
    pd.DataFrame({"swc": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]}).to_csv(tmp_path / "b.csv", index=False)
    code, out, _ = run(
        capsys, "wilcoxon", "--a", str(tmp_path / "a.csv"), "--b", str(tmp_path / "b.csv"), "--alternative", "greater", "--bonferroni", "3"
    )
    res = json.loads(out)
    assert code == 0 and res["p_value"] == pytest.approx(1 / 64) and res["reject"] is True


def test_report(tree, capsys, tmp_path):
    code, out, _ = run(capsys, "report", "--data", str(tree), "--out", str(tmp_path / "rep"))
    assert code == 0
    names = {p.split("/")[-1] for p in json.loads(out)["files"]}
    assert {"summary.csv", "measures.csv", "segment_lengths.csv", "per_pattern_correlated_100.csv"} <= names


def test_errors_are_one_json_line(tmp_path, capsys):
    code, out, err = run(capsys, "validate", "--data", str(tmp_path / "missing"))
    assert code == 1 and out == ""
    payload = json.loads(err.strip())
    assert set(payload) == {"error", "message", "command"} and payload["command"] == "validate"


def test_unknown_stage(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--out", str(tmp_path), "--stages", "cooked")
    assert code == 1 and "cooked" in json.loads(err)["message"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "corrbench", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "generate" in res.stdout
