import csv
import json

from onebit_ar.cli import TRACE_FIELDS, main

SMALL = {"m_r": 2, "m_t": 4, "n_train": 4, "k_paths": 1, "training": "unitary", "snr_grid_db": [10.0],
         "trials": 2, "biht_grid_points": 16, "biht_iters": 20}


def _cfg(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(SMALL))
    return str(p)


def test_simulate_with_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["simulate", "--config", _cfg(tmp_path), "--trace", str(trace)]) == 0
    out = capsys.readouterr().out
    assert "ar    nmse" in out and "biht  nmse" in out
    with open(trace) as fh:
        rows = list(csv.DictReader(fh))
    assert rows and list(rows[0]) == TRACE_FIELDS


def test_sweep_writes_csvs(tmp_path):
    out = tmp_path / "res.csv"
    assert main(["sweep", "--config", _cfg(tmp_path), "--out", str(out), "--seed", "3"]) == 0
    assert out.exists() and (tmp_path / "res_trials.csv").exists()


def test_check_passes(capsys):
    assert main(["check"]) == 0
    assert "10/10 checks passed" in capsys.readouterr().out


def test_bad_estimator(tmp_path, capsys):
    assert main(["sweep", "--config", _cfg(tmp_path), "--estimators", "omp"]) == 2
    assert "unknown estimators" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "none.json")]) == 2
