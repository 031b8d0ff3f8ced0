import csv
import json
import os

import pytest

from fraccert import cli


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def test_certify_example_passes(tmp_path):
    code, out = run(tmp_path, "certify", "--N", "1", "--s", "0.5", "--alpha", "0",
                    "--beta", "0.5", "--K", "1", "--p", "1")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["passed"] is True
    assert rep["result"]["case"] == "II"
    assert rep["result"]["parabolic"]["verdict"] == "pass"
    assert rep["result"]["elliptic"]["verdict"] == "pass"
    assert "verdict: PASS" in (out / "summary.txt").read_text()


def test_report_embeds_resolved_config(tmp_path):
    code, out = run(tmp_path, "norm", "--beta", "2")
    rep = json.loads((out / "report.json").read_text())
    expected = {f.name for f in cli.dataclasses.fields(cli.RunConfig)}
    assert set(rep["config"]) == expected
    assert rep["config"]["beta"] == 2.0
    assert rep["config"]["seed"] == 0


def test_flap_table(tmp_path):
    code, out = run(tmp_path, "flap", "--s", "0.75")
    assert code == 0
    with open(out / "data.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {"r", "closed_form", "pv_quadrature", "spectral", "max_rel_err"} <= set(rows[0])
    assert max(float(r["max_rel_err"]) for r in rows) <= 1e-4


def test_bad_beta_is_config_error(tmp_path, capsys):
    code, out = run(tmp_path, "certify", "--beta", "-1")
    assert code == 2
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1
    assert "beta" in err
    assert not out.exists()


@pytest.mark.parametrize("payload,word", [({"s": 1.5}, "s must"), ({"bogus": 1}, "unknown"),
                                          ({"M": 7}, "M must")])
def test_config_file_errors(tmp_path, capsys, payload, word):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(payload))
    code, _ = run(tmp_path, "kernel", "--config", str(cfg))
    assert code == 2
    assert word in capsys.readouterr().err


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"beta": 3.0, "p": 2.0}))
    code, out = run(tmp_path, "norm", "--config", str(cfg), "--beta", "2")
    rep = json.loads((out / "report.json").read_text())
    assert rep["config"]["beta"] == 2.0 and rep["config"]["p"] == 2.0


def test_check_failure_exit_code(tmp_path):
    # alpha = 2s with beta = N and no log correction falls in no case
    code, out = run(tmp_path, "certify", "--alpha", "1", "--beta", "1")
    assert code == 1
    assert json.loads((out / "report.json").read_text())["passed"] is False


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(cfg):
        raise ArithmeticError("series did not converge")

    monkeypatch.setitem(cli.DISPATCH, "norm", boom)
    code, out = run(tmp_path, "norm")
    assert code == 3
    assert "did not converge" in json.loads((out / "report.json").read_text())["result"]["error"]


def test_deterministic_reports(tmp_path):
    # the output directory is part of the config, so both runs share it
    _, out = run(tmp_path, "certify", "--seed", "7")
    first = {n: (out / n).read_bytes() for n in ("report.json", "data.csv", "summary.txt")}
    run(tmp_path, "certify", "--seed", "7")
    for name, data in first.items():
        assert (out / name).read_bytes() == data


def test_atomic_write_leaves_no_temp_files(tmp_path):
    _, out = run(tmp_path, "kernel")
    assert sorted(os.listdir(out)) == ["data.csv", "report.json", "summary.txt"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "f.txt"
    target.write_text("old")

    def fail(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(cli.os, "replace", fail)
    with pytest.raises(OSError):
        cli._atomic_write(str(target), "new")
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["f.txt"]
