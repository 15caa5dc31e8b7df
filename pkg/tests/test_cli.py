import csv
import re
import subprocess
import sys

import numpy as np
import pytest

from kbmom.cli import fmt, main
from kbmom.datagen import generate, preset, sample_mixture
from kbmom.harness import save_csv


@pytest.fixture
def data_csv(tmp_path):
    path = tmp_path / "data.csv"
    save_csv(generate(preset("sim1"), 0), path)
    return path


def test_fmt():
    assert fmt(0.123456789) == "0.123457"
    assert fmt(1234567.0) == "1.23457e+06"
    assert fmt(3) == "3"
    assert fmt(True) == "True"


@pytest.mark.parametrize("method", ["kbmom", "block-kmom", "kmeans", "kmedians", "trimmed-kmeans"])
def test_cluster_writes_outputs(tmp_path, data_csv, capsys, method):
    out = tmp_path / "out"
    code = main(["cluster", "--input", str(data_csv), "--k", "3", "--method", method,
                 "--block-size", "18", "--alpha", "0.01", "--output", str(out)])
    assert code == 0
    labels = list(csv.reader(open(out / "labels.csv")))
    assert labels[0] == ["row_index", "label"] and len(labels) == 901
    centers = list(csv.reader(open(out / "centers.csv")))
    assert len(centers) == 4
    text = capsys.readouterr().out
    assert "iterations" in text and "distortion" in text


def test_cluster_block_size_too_small(data_csv, capsys):
    assert main(["cluster", "--input", str(data_csv), "--k", "3", "--block-size", "3"]) == 2
    assert "n_B > K" in capsys.readouterr().err


def test_cluster_missing_input(tmp_path):
    assert main(["cluster", "--input", str(tmp_path / "none.csv"), "--k", "3",
                 "--block-size", "18"]) == 3


def test_cluster_bad_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\nabc,1\n")
    assert main(["cluster", "--input", str(bad), "--k", "1", "--block-size", "5"]) == 3
    assert "row 2, column 1" in capsys.readouterr().err


def test_tune_preset(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["tune", "--preset", "tuning", "--blocks", "50", "--seed", "3",
                 "--output", str(out)]) == 0
    text = capsys.readouterr().out
    assert re.search(r"selected_n_B \d+", text)
    assert out.exists()


def test_tune_two_point_grid(data_csv):
    assert main(["tune", "--input", str(data_csv), "--k", "3", "--grid", "10,20"]) == 2


def test_tune_clean_data(tmp_path, capsys):
    path = tmp_path / "clean.csv"
    save_csv(sample_mixture(preset("tuning").mixture, 0), path)
    assert main(["tune", "--input", str(path), "--k", "3", "--grid", "auto:20"]) == 0
    text = capsys.readouterr().out
    assert "no breakpoint" in text and "selected_n_B 300" in text


def test_breakdown(capsys):
    assert main(["breakdown", "--n", "600", "--m", "9", "--block-size", "18", "--blocks", "20",
                 "--trials", "2000"]) == 0
    text = capsys.readouterr().out
    assert "n_B_max 45" in text
    assert "B_min_at_block_size 34" in text


def test_breakdown_clean_and_errors(capsys):
    assert main(["breakdown", "--n", "100", "--m", "0", "--block-size", "5", "--blocks", "5",
                 "--trials", "100"]) == 0
    assert "mc_estimate 1 " in capsys.readouterr().out
    assert main(["breakdown", "--n", "600", "--m", "9", "--block-size", "18", "--blocks", "20",
                 "--trials", "0"]) == 2
    assert main(["breakdown", "--n", "600", "--m", "9", "--block-size", "60", "--blocks", "20",
                 "--trials", "10"]) == 2


def test_simulate(tmp_path, capsys):
    assert main(["simulate", "sim1", "--reps", "2", "--methods", "kmeans++,kbmom-km++",
                 "--output", str(tmp_path)]) == 0
    assert (tmp_path / "sim1_m9_beta5" / "summary.csv").exists()
    assert (tmp_path / "sim1_m27_beta20" / "reps.csv").exists()
    assert main(["simulate", "bench1", "--reps", "1", "--methods", "kmeans",
                 "--output", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "reps.csv").exists()


def test_simulate_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"bogus": 1}')
    assert main(["simulate", "sim1", "--config", str(cfg)]) == 2
    assert main(["simulate", "sim1", "--config", str(tmp_path / "missing.json")]) == 2


def test_estimate(tmp_path, capsys):
    path = tmp_path / "v.csv"
    path.write_text("v\n" + "\n".join(["1"] * 20 + ["1000"]) + "\n")
    assert main(["estimate", "--input", str(path), "--block-size", "3", "--blocks", "51"]) == 0
    assert "bmom 1\n" in capsys.readouterr().out
    assert main(["estimate", "--input", str(path), "--block-size", "3", "--blocks", "5",
                 "--column", "4"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "kbmom", "--backend-info"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and r.stdout.startswith("backend ")
