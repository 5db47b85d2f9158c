import csv

import pytest

from clvsim.cli import main
from clvsim.io import read_dataset


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def strong_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "strong.csv"
    assert main(["generate", "--variables", "300", "--factors", "6", "--k", "1.0", "--seed", "7",
                 "--out", str(path)]) == 0
    return path


def test_generate_shape(strong_file):
    with open(strong_file) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 41
    assert all(len(r) == 302 for r in rows)


def test_generate_to_stdout_reports_seed(capsys):
    code, out, err = run(capsys, "generate", "--variables", "10", "--factors", "2", "--seed", "3")
    assert code == 0
    assert out.splitlines()[0].startswith("subject_id,group,v0001")
    assert err.strip() == "seed=3"


def test_generate_without_seed_prints_one(capsys, tmp_path):
    code, _, err = run(capsys, "generate", "--variables", "10", "--factors", "2", "--out", tmp_path / "a.csv")
    assert code == 0
    seed = int(err.strip().split("=")[1])
    run(capsys, "generate", "--variables", "10", "--factors", "2", "--seed", seed, "--out", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_generate_deterministic(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert main(["generate", "--variables", "300", "--factors", "6", "--k", "1.0", "--seed", "7",
                     "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_generate_rejects_k(capsys):
    code, _, err = run(capsys, "generate", "--k", "1.5", "--seed", "1")
    assert code != 0
    assert "k must be in [0, 1]" in err
    assert len(err.strip().splitlines()) == 1


def test_generate_from_config(capsys, tmp_path):
    cfg = tmp_path / "gen.toml"
    cfg.write_text("variables = 12\nfactors = 3\nk = 0.5\nseed = 11\n")
    out_path = tmp_path / "d.csv"
    assert main(["generate", "--config", str(cfg), "--variables", "14", "--out", str(out_path)]) == 0
    ds = read_dataset(out_path)
    assert ds.observations.shape == (40, 14)
    cfg.write_text("variables = 12\ncolour = 3\n")
    code, _, err = run(capsys, "generate", "--config", cfg)
    assert code == 1 and "colour" in err


def test_classify_generated_file(capsys, strong_file, tmp_path):
    out_path = tmp_path / "cls.csv"
    code, out, _ = run(capsys, "classify", strong_file, "--rv", "6", "--seed", "1", "--out", out_path)
    assert code == 0
    fraction = float(out.split("congruence_fraction=")[1].split()[0])
    assert fraction >= 0.85
    lines = out_path.read_text().splitlines()
    assert lines[0].startswith("# congruence_count=")
    assert lines[1] == "subject_id,true_group,predicted_group"
    assert len(lines) == 42


def test_classify_is_deterministic(capsys, strong_file):
    first = run(capsys, "classify", strong_file, "--rv", "3", "--seed", "5")
    second = run(capsys, "classify", strong_file, "--rv", "3", "--seed", "5")
    assert first[0] == 0 and first[1] == second[1]


def test_classify_without_group_column(capsys, strong_file, tmp_path):
    with open(strong_file) as fh:
        rows = list(csv.reader(fh))
    stripped = tmp_path / "unlabeled.csv"
    with open(stripped, "w", newline="") as fh:
        csv.writer(fh).writerows([r[:1] + r[2:] for r in rows])
    code, out, _ = run(capsys, "classify", stripped, "--seed", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "subject_id,predicted_group"
    assert len(lines) == 41
    assert "congruence" not in out


@pytest.mark.parametrize("rv", ["7", "1"])
def test_classify_rv_out_of_range(capsys, strong_file, rv):
    code, _, err = run(capsys, "classify", strong_file, "--rv", rv)
    assert code == 2
    assert "usage error" in err and "2..6" in err


def test_classify_bad_inputs(capsys, tmp_path):
    code, _, err = run(capsys, "classify", tmp_path / "missing.csv")
    assert code == 1
    flat = tmp_path / "flat.csv"
    flat.write_text("subject_id,a,b\n1,1,2\n2,1,3\n3,1,5\n")
    code, _, err = run(capsys, "classify", flat, "--rv", "2", "--seed", "0")
    assert code == 1 and "'a'" in err and "zero variance" in err
    bad = tmp_path / "bad.csv"
    bad.write_text("subject_id,a\n1,x\n")
    code, _, err = run(capsys, "classify", bad)
    assert code == 1 and "non-numeric" in err


def test_unknown_flag(capsys):
    code, _, err = run(capsys, "generate", "--colour", "red")
    assert code == 2 and "--colour" in err


def test_missing_subcommand(capsys):
    code, _, _ = run(capsys)
    assert code == 2


SMALL_GRID = (
    "variables_list = [30]\nfactors_list = [4]\nk_list = [0.0, 1.0]\nreplicates = 3\n"
    "rv_counts = [2, 6]\nrestarts = 3\nbase_seed = 5\ndescriptive_cells = [[30, 4]]\n"
)


def test_experiment_small_config(capsys, tmp_path):
    cfg = tmp_path / "grid.toml"
    cfg.write_text(SMALL_GRID)
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "experiment", "--config", cfg, "--out", out_dir, "--workers", "1")
    assert code == 0
    for name in ("replicates.csv", "cells.csv", "descriptive.csv", "anova.csv", "config_used.toml"):
        assert (out_dir / name).exists()
    progress = [line for line in out.splitlines() if line.startswith("cell ")]
    assert len(progress) == 2
    with open(out_dir / "replicates.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 2 * 3 * 2


def test_experiment_seed_override(capsys, tmp_path):
    cfg = tmp_path / "grid.toml"
    cfg.write_text(SMALL_GRID)
    run(capsys, "experiment", "--config", cfg, "--out", tmp_path / "a", "--workers", "1")
    run(capsys, "experiment", "--config", cfg, "--out", tmp_path / "b", "--workers", "1", "--seed", "6")
    assert "base_seed = 6" in (tmp_path / "b" / "config_used.toml").read_text()
    assert (tmp_path / "a" / "replicates.csv").read_bytes() != (tmp_path / "b" / "replicates.csv").read_bytes()


def test_experiment_missing_config(capsys, tmp_path):
    out_dir = tmp_path / "out"
    code, _, err = run(capsys, "experiment", "--config", tmp_path / "nope.toml", "--out", out_dir)
    assert code != 0 and "not found" in err
    assert not out_dir.exists()


def test_experiment_invalid_config(capsys, tmp_path):
    cfg = tmp_path / "grid.toml"
    cfg.write_text("rv_counts = [1, 2]\n")
    out_dir = tmp_path / "out"
    code, _, _ = run(capsys, "experiment", "--config", cfg, "--out", out_dir)
    assert code != 0
    assert not out_dir.exists()


def test_scan(capsys, strong_file, tmp_path):
    out_path = tmp_path / "scan.csv"
    code, out, _ = run(capsys, "scan", strong_file, "--out", out_path)
    assert code == 0
    fields = dict(part.split("=") for part in out.split())
    assert 0 <= float(fields["u_sig_fraction"]) <= 1
    with open(out_path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and set(rows[0]) == {"u_sig_fraction", "r_sig_fraction", "mean_r", "mean_abs_r"}
