import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from alphys import cli
from alphys import datasets as ds
from alphys.classifiers import PhaseOvrModel, svm_fit
from alphys.classifiers.io import save_model


def _cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


QUTRIT = {"case": 1, "side": 9, "budget": 8, "trials": 2}


def test_al_qutrit_outputs(tmp_path):
    rc = cli.main(["al", "qutrit", "--config", _cfg(tmp_path, QUTRIT), "--out", str(tmp_path / "o")])
    assert rc == 0
    agg = _rows(tmp_path / "o" / "qutrit_aggregate.csv")
    assert agg[0] == ["strategy", "n_labels", "n_trials", "mean_accuracy", "std_accuracy",
                      "mean_fidelity"]
    assert {r[0] for r in agg[1:]} == set(cli.STRATEGIES)
    assert all(len(r[3].split(".")[1]) == 6 for r in agg[1:])
    trials = _rows(tmp_path / "o" / "qutrit_trials.csv")
    assert trials[0] == ["strategy", "trial", "n_labels", "accuracy", "mean_fidelity"]


def test_aggregate_matches_trials(tmp_path):
    cli.main(["al", "qutrit", "--config", _cfg(tmp_path, QUTRIT), "--out", str(tmp_path)])
    trials = _rows(tmp_path / "qutrit_trials.csv")[1:]
    agg = _rows(tmp_path / "qutrit_aggregate.csv")[1:]
    for s, n, cnt, mean, std, _ in agg:
        acc = [float(r[3]) for r in trials if r[0] == s and r[2] == n]
        assert int(cnt) == len(acc)
        assert float(mean) == pytest.approx(np.mean(acc), abs=2e-6)
        assert float(std) == pytest.approx(np.std(acc, ddof=1), abs=2e-6)


def test_determinism_and_workers(tmp_path):
    cfg = _cfg(tmp_path, QUTRIT)
    for name, workers in (("a", "1"), ("b", "1"), ("c", "2")):
        assert cli.main(["al", "qutrit", "--config", cfg, "--out", str(tmp_path / name),
                         "--workers", workers]) == 0
    ref = (tmp_path / "a" / "qutrit_trials.csv").read_bytes()
    assert (tmp_path / "b" / "qutrit_trials.csv").read_bytes() == ref
    assert (tmp_path / "c" / "qutrit_trials.csv").read_bytes() == ref


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = _cfg(tmp_path, QUTRIT)

    def run(name, *extra):
        cli.main(["al", "qutrit", "--config", cfg, "--out", str(tmp_path / name), *extra])
        return (tmp_path / name / "qutrit_trials.csv").read_bytes()

    base = run("base")
    monkeypatch.setenv("ALPHYS_SEED", "17")
    env = run("env")
    flag = run("flag", "--seed", "0")
    assert env != base and flag == base


def test_unknown_key_reports_line(tmp_path, capsys):
    text = '{\n  "case": 1,\n  "side": 9,\n  "bogus": 3\n}\n'
    (tmp_path / "bad.json").write_text(text)
    rc = cli.main(["al", "qutrit", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)])
    assert rc == 2
    assert "line 4" in capsys.readouterr().err


@pytest.mark.parametrize("doc", [{"trials": 0}, {"case": 3}, {"strategies": ["qbc"]},
                                 {"budget": 2}, {"coupling": {"theta_a": 0.5, "x": 1}}])
def test_invalid_values_exit_2(tmp_path, doc):
    assert cli.main(["al", "qutrit", "--config", _cfg(tmp_path, doc), "--out", str(tmp_path)]) == 2


def test_malformed_json_exit_2(tmp_path, capsys):
    (tmp_path / "x.json").write_text('{\n  "case": 1,\n  oops\n}')
    assert cli.main(["al", "qutrit", "--config", str(tmp_path / "x.json"), "--out", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_io_error_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    rc = cli.main(["dataset", "gen", "--out", str(blocker / "sub")])
    assert rc == 3


def test_dataset_gen(tmp_path):
    assert cli.main(["dataset", "gen", "--out", str(tmp_path)]) == 0
    grid = ds.load_qutrit_csv(tmp_path / "qutrit_case1.csv")
    assert len(grid) == 441
    cfg = _cfg(tmp_path, {"kind": "phase", "step": 0.05})
    assert cli.main(["dataset", "gen", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert len(ds.load_phase_csv(tmp_path / "phase_grid.csv")) == 23 * 13


def test_al_phase_and_heatmap(tmp_path):
    cfg = _cfg(tmp_path, {"step": 0.05, "budget": 20, "trials": 1, "k": 50})
    assert cli.main(["al", "phase", "--config", cfg, "--out", str(tmp_path)]) == 0
    agg = _rows(tmp_path / "phase_triple_aggregate.csv")
    assert {r[0] for r in agg[1:]} == {"random", "margin"}
    snap = tmp_path / "model_triple_margin_trial0.json"
    assert snap.exists()
    out = tmp_path / "hm.csv"
    assert cli.main(["heatmap", "--model", str(snap), "--out", str(out), "--step", "0.05"]) == 0
    rows = _rows(out)
    assert rows[0] == ["gamma_ratio", "t_ratio", "f_para", "f_ord", "phase"]
    assert len(rows) - 1 == 23 * 13


def test_heatmap_missing_model(tmp_path):
    assert cli.main(["heatmap", "--model", str(tmp_path / "none.json"),
                     "--out", str(tmp_path / "h.csv")]) == 2


def test_heatmap_consistency_and_contours(tmp_path):
    grid = ds.gen_phase_grid(step=0.05)
    para = svm_fit(grid.x, ds.ovr_truth(grid.phase, ds.PARA_VS_REST))
    dom = grid.ordered_domain()
    ordm = svm_fit(grid.x[dom], ds.ovr_truth(grid.phase[dom], ds.ORDERED_VS_REST))
    save_model(PhaseOvrModel(para, ordm), tmp_path / "m.json")
    cli.main(["heatmap", "--model", str(tmp_path / "m.json"), "--out", str(tmp_path / "h.csv"),
              "--step", "0.02"])
    rows = _rows(tmp_path / "h.csv")[1:]
    g = np.array([float(r[0]) for r in rows])
    f_para = np.array([float(r[2]) for r in rows])
    f_ord = np.array([float(r[3]) for r in rows])
    phase = [r[4] for r in rows]
    for fp, fo, ph in zip(f_para, f_ord, phase):
        if fp > 0:
            assert ph == "PARAMAGNETIC"
        elif not np.isnan(fo) and fo > 0:
            assert ph == "ORDERED"
        else:
            assert ph == "KT"
    # rows are row-major with gamma fastest, so a column is a fixed gamma
    for gv in np.unique(g):
        col = np.sign(f_para[g == gv])
        assert np.count_nonzero(np.diff(col)) <= 2


def test_ssl_phase(tmp_path):
    cfg = _cfg(tmp_path, {"step": 0.05, "budget": 20, "checkpoints": [10, 20], "trials": 1})
    assert cli.main(["ssl", "phase", "--config", cfg, "--out", str(tmp_path)]) == 0
    agg = _rows(tmp_path / "ssl_aggregate.csv")
    assert [r[0] for r in agg[1:]] == ["10", "20"]


def test_ctqmc_run_and_validate(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"lattice": "triangle", "sweeps": 300, "thermalization": 20}, "run.json")
    assert cli.main(["ctqmc", "run", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "ctqmc.csv")
    assert rows[0] == ["trial", "L", "J", "Gamma", "T", "sweeps", "observable", "mean", "stderr"]
    assert "energy" in {r[6] for r in rows[1:]}
    cfg = _cfg(tmp_path, {"lattices": ["triangle"], "points": [[1.0, 0.8, 1.0]], "sweeps": 5000,
                          "thermalization": 200}, "val.json")
    assert cli.main(["ctqmc", "validate", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.count("ok") == 2
    assert _rows(tmp_path / "ctqmc_validate.csv")[0][-2:] == ["exact", "z"]


def test_reconstruct_demo(tmp_path):
    assert cli.main(["reconstruct", "demo", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "reconstruct.csv")[1:]
    assert len(rows) == 20 * 4 * 3
    assert max(abs(float(r[4]) - float(r[5])) for r in rows) <= 1e-9


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "alphys.cli", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "al" in out.stdout
