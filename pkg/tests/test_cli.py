import json
import subprocess
import sys

import numpy as np
import pytest

from robsvm.cli import main
from robsvm.data import Dataset, load_csv, write_csv
from robsvm.svm import TrainedModel


@pytest.fixture
def data_csv(tmp_path):
    rng = np.random.default_rng(0)
    y = np.where(rng.random(40) < 0.5, 1.0, -1.0)
    X = rng.normal(size=(40, 2)) + 1.5 * y[:, None]
    p = tmp_path / "d.csv"
    write_csv(Dataset(X, y, ("x1", "x2")), p, "y")
    return p


def test_train_eel_rbf(tmp_path, data_csv):
    out = tmp_path / "m.model"
    code = main(["train", "--data", str(data_csv), "--label", "y", "--model", "eel-svm", "--kernel", "rbf",
                 "--gamma", "0.5", "--D", "200", "--alpha", "0.1", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["format"] == "robsvm-model" and doc["format_version"] == 1
    m = TrainedModel.load(out)
    assert m.hyperparams["D"] == 200.0 and m.hyperparams["alpha"] == 0.1


@pytest.mark.parametrize("model", ["c-svm", "sp-svm"])
def test_train_predict_roundtrip(tmp_path, data_csv, capsys, model):
    out = tmp_path / "m.json"
    before = data_csv.read_bytes()
    assert main(["train", "--data", str(data_csv), "--label", "y", "--model", model, "--C", "10",
                 "--alpha", "0.6", "--out", str(out)]) == 0
    pred = tmp_path / "p.csv"
    assert main(["predict", "--model", str(out), "--data", str(data_csv), "--label", "y",
                 "--keep-columns", "x1", "--out", str(pred)]) == 0
    lines = pred.read_text().splitlines()
    assert lines[0] == "x1,label,prediction,decision_value"
    assert len(lines) == 41
    assert data_csv.read_bytes() == before  # inputs untouched


def test_dump_qp(tmp_path, data_csv):
    dump = tmp_path / "qp.txt"
    assert main(["train", "--data", str(data_csv), "--label", "y", "--model", "sp-svm", "--alpha", "0.7",
                 "--out", str(tmp_path / "m.json"), "--dump-qp", str(dump)]) == 0
    from robsvm.qp import load_qp
    with open(dump) as fh:
        assert load_qp(fh).n == 120


def test_cv(tmp_path, data_csv):
    out = tmp_path / "cv.csv"
    assert main(["cv", "--data", str(data_csv), "--label", "y", "--model", "eel-svm",
                 "--grid", "C=1,10;alpha=0,0.1", "--folds", "4", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "C,alpha,mean_accuracy,best"
    assert len(rows) == 5 and sum(int(r.split(",")[-1]) for r in rows[1:]) == 1


def test_contaminate_generate(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["contaminate", "--generate", "200", "--ratio", "0.05", "--family", "t1", "--seed", "1",
                 "--out", str(out)]) == 0
    ds = load_csv(out, "label")
    assert ds.n == 200 and ds.d == 2
    out2 = tmp_path / "c2.csv"
    main(["contaminate", "--generate", "200", "--ratio", "0.05", "--family", "t1", "--seed", "1",
          "--out", str(out2)])
    assert out.read_bytes() == out2.read_bytes()


def test_contaminate_awgn(tmp_path, data_csv):
    out = tmp_path / "n.csv"
    assert main(["contaminate", "--data", str(data_csv), "--label", "y", "--snr-db", "300",
                 "--out", str(out)]) == 0
    a, b = load_csv(data_csv, "y"), load_csv(out, "label")
    np.testing.assert_allclose(a.features, b.features, atol=1e-10)


def test_fairness(tmp_path, capsys):
    p = tmp_path / "p.csv"
    p.write_text("group,prediction,label\nA,-1,-1\nA,1,-1\nB,1,1\nB,1,1\n")
    assert main(["fairness", "--predictions", str(p), "--strata-column", "group", "--truth", str(p)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "# robsvm-fairness-report v1"
    assert "CDD,overall,0.0,0.0" in out


def test_fisher_check(capsys):
    assert main(["fisher-check", "--loss", "hinge", "--p", "0.7"]) == 0
    assert float(capsys.readouterr().out) == 1.0
    assert main(["fisher-check", "--loss", "least_square", "--p", "0.7"]) == 0
    assert abs(float(capsys.readouterr().out) - 0.4) < 1e-3


def test_synth_bench_deterministic(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("reps = 2\nn = 30\nratio = 0.1\nfamily = t1\nmethods = csvm, spsvm\nfolds = 3\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["synth-bench", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["synth-bench", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.timing.csv").exists()


# ---------------------------------------------------------------- exit codes

def test_unknown_flag_is_usage_error(capsys):
    assert main(["train", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_missing_subcommand():
    assert main([]) == 1


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "synth-bench" in capsys.readouterr().out


def test_bad_value_is_usage_error(tmp_path, data_csv):
    assert main(["train", "--data", str(data_csv), "--label", "y", "--model", "c-svm", "--C", "-1",
                 "--out", str(tmp_path / "m.json")]) == 1
    assert main(["fisher-check", "--loss", "hinge", "--p", "0.4", "--q", "0.4"]) == 1


def test_data_error(tmp_path):
    assert main(["train", "--data", str(tmp_path / "missing.csv"), "--label", "y", "--model", "c-svm",
                 "--out", str(tmp_path / "m.json")]) == 2
    one = tmp_path / "one.csv"
    one.write_text("x,y\n1,1\n2,1\n")
    assert main(["train", "--data", str(one), "--label", "y", "--model", "c-svm",
                 "--out", str(tmp_path / "m.json")]) == 2


def test_solver_failure_exit_code(tmp_path, data_csv, monkeypatch):
    from robsvm import svm
    from robsvm.errors import SolverError

    def boom(*a, **k):
        raise SolverError("forced")
    monkeypatch.setattr(svm, "_solve_scaled", boom)
    assert main(["train", "--data", str(data_csv), "--label", "y", "--model", "eel-svm",
                 "--out", str(tmp_path / "m.json")]) == 3


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "robsvm.cli", "fisher-check", "--loss", "hinge", "--p", "0.6"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and float(r.stdout) == 1.0
