import shutil
import subprocess
import sys

import pytest

from sentipipe import data_path
from sentipipe.cli import main
from sentipipe.experiment import ConfigError, ExperimentConfig

CONFIG = """\
[data]
train = train.tsv
test = test.tsv
task_kind = targeted
embedding_dim = 8

[reformulate]
scheme = {scheme}

[model]
family = {family}
{model}

[train]
lr = 0.01
batch_size = 16
epochs = 2
runs = {runs}
seed = 3

[output]
reference = ref.tsv
reference_dataset = sentirueval2016_banks

[grid]
lr = 0.01, 0.001
"""

MODELS = {
    "linear": "",
    "cnn": "max_len = 12\nwindows = 2, 3\nfilters = 4",
    "lstm": "max_len = 12\nfc_size = 8",
    "bilstm": "max_len = 12\nfc_size = 8",
    "transformer": "layers = 1\nhidden = 8\nheads = 2\nmax_len = 24",
}


def make_config(tmp_path, family="cnn", runs=2, scheme="pair_nli", **extra):
    shutil.copy(data_path("demo_train.tsv"), tmp_path / "train.tsv")
    shutil.copy(data_path("demo_test.tsv"), tmp_path / "test.tsv")
    shutil.copy(data_path("reference_scores.tsv"), tmp_path / "ref.tsv")
    text = CONFIG.format(family=family, model=MODELS[family], runs=runs, scheme=scheme)
    for key, value in extra.items():
        text = text.replace(f"{key} = ", f"{key} = {value}\n#", 1)
    p = tmp_path / "exp.ini"
    p.write_text(text, encoding="utf-8")
    return p


MACHINE_FILES = ["mean_report.tsv", "comparison.tsv", "config.ini", "run0/report.tsv",
                 "run0/history.tsv", "run0/predictions.tsv"]


@pytest.mark.parametrize("family", sorted(MODELS))
def test_train_writes_reports(tmp_path, family, capsys):
    cfg = make_config(tmp_path, family)
    out = tmp_path / "out"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    for name in MACHINE_FILES + ["run1/report.tsv", "checkpoint.npz", "run.log"]:
        assert (out / name).is_file(), name
    assert not (out / "run2").exists()
    assert "seed 3" in (out / "run.log").read_text() and "seed 4" in (out / "run.log").read_text()
    assert "55.17" in (out / "comparison.tsv").read_text()
    capsys.readouterr()
    assert main(["evaluate", "--config", str(cfg), "--checkpoint", str(out / "checkpoint.npz")]) == 0
    reported = capsys.readouterr().out
    assert reported == (out / "run0" / "report.tsv").read_text()


def test_rerun_is_byte_identical(tmp_path):
    cfg = make_config(tmp_path, "lstm")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["train", "--config", str(cfg), "--out", str(b)]) == 0
    for name in MACHINE_FILES:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_seed_override_changes_snapshot(tmp_path):
    cfg = make_config(tmp_path, "linear", runs=1)
    out = tmp_path / "o"
    assert main(["train", "--config", str(cfg), "--out", str(out), "--seed", "42"]) == 0
    snap = (out / "config.ini").read_text()
    assert "seed = 42" in snap and "valid_fraction = 0.1" in snap  # defaults materialized
    # the snapshot alone re-runs the experiment
    again = tmp_path / "again"
    assert main(["train", "--config", str(out / "config.ini"), "--out", str(again)]) == 0
    assert (again / "mean_report.tsv").read_bytes() == (out / "mean_report.tsv").read_bytes()


def test_missing_train_file_exit_2(tmp_path, capsys):
    cfg = make_config(tmp_path, train="nope.tsv")
    out = tmp_path / "out"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 2
    assert "nope.tsv" in capsys.readouterr().err
    assert not out.exists()


def test_failure_mid_run_leaves_nothing(tmp_path):
    # a 4-position transformer cannot hold the auxiliary sentence
    cfg = make_config(tmp_path, "transformer")
    cfg.write_text(cfg.read_text().replace("max_len = 24", "max_len = 4"))
    out = tmp_path / "out"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) != 0
    assert not out.exists()
    assert not list(tmp_path.glob(".partial-*"))


def test_bad_config_values(tmp_path):
    cfg = make_config(tmp_path)
    cfg.write_text(cfg.read_text().replace("family = cnn", "family = svm"))
    with pytest.raises(ConfigError):
        ExperimentConfig.load(cfg)
    assert main(["train", "--config", str(cfg)]) == 2
    cfg.write_text("[data]\ntrain = train.tsv\n[bogus]\nx = 1\n")
    assert main(["train", "--config", str(cfg)]) == 2
    assert main(["train"]) == 2
    assert main(["frobnicate"]) == 2


def test_grid(tmp_path):
    cfg = make_config(tmp_path, "linear", runs=1)
    out = tmp_path / "g"
    assert main(["grid", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "grid.tsv").read_text().splitlines()
    assert lines[0] == "lr\tf1pm_macro" and len(lines) == 3
    assert "[best]" in (out / "best.ini").read_text()


def test_stats_normalize_reformulate(tmp_path, capsys):
    p = tmp_path / "four.tsv"
    p.write_text("id\ttext\tentity\tlabel\n1\ta\t\t1\n2\tb\t\t-1\n3\tc\t\t0\n4\td\t\t0\n", encoding="utf-8")
    assert main(["stats", str(p), "--task-kind", "general"]) == 0
    assert "four\t4\t25\t25\t50" in capsys.readouterr().out
    assert main(["normalize", "--text", "Привет @ivan смотри http://t.co/x"]) == 0
    assert capsys.readouterr().out == "привет user смотри url\n"
    assert main(["reformulate", "--data", str(data_path("demo_test.tsv")), "--scheme", "pair_qa"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1].endswith("\tWhat do you think about MASK?") and "MASK" in out[1].split("\t")[1]


def test_evaluate_predictions_and_compare(tmp_path, capsys):
    gold = tmp_path / "g.tsv"
    gold.write_text("id\ttext\tentity\tlabel\na\tx\t\t1\nb\ty\t\t1\nc\tz\t\t-1\nd\tw\t\t0\n", encoding="utf-8")
    pred = tmp_path / "p.tsv"
    pred.write_text("id\tlabel\na\t1\nb\t-1\nc\t-1\nd\t0\n", encoding="utf-8")
    assert main(["evaluate", "--gold", str(gold), "--predictions", str(pred), "--task-kind", "general",
                 "--out", str(tmp_path / "ev")]) == 0
    report = (tmp_path / "ev" / "report.tsv").read_text()
    assert "accuracy\t0.75\n" in report and "f1pm_micro\t0.6666666666666666\n" in report
    capsys.readouterr()
    assert main(["compare", "--report", str(tmp_path / "ev" / "report.tsv"),
                 "--reference", str(data_path("reference_scores.tsv")), "--dataset", "romip2013"]) == 0
    assert "61.60" in capsys.readouterr().out
    # the bundled published scores are the default reference
    assert main(["compare", "--report", str(tmp_path / "ev" / "report.tsv"), "--dataset", "romip2013"]) == 0
    assert "61.60" in capsys.readouterr().out
    pred.write_text("id\tlabel\na\t1\n", encoding="utf-8")
    assert main(["evaluate", "--gold", str(gold), "--predictions", str(pred), "--task-kind", "general"]) == 2


def test_difficult_command(tmp_path, capsys):
    assert main(["difficult", "--matrix", str(data_path("difficult_predictions.tsv")), "--out", str(tmp_path)]) == 0
    assert "share" in capsys.readouterr().out
    assert (tmp_path / "difficult.tsv").is_file()
    p = tmp_path / "m.tsv"
    p.write_text("id\tlabel\nex1\t-1\n", encoding="utf-8")
    assert main(["difficult", "--set", str(data_path("difficult_set.tsv")), "--predictions", f"m={p}"]) == 2


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "sentipipe.cli", "normalize", "--text", "Скуучнооооо :("],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "скуучноо sad\n"
