import json

import pytest

from rspforge import cli
from rspforge.cli import RunConfig, UsageError, main, run, sweep_csv


def test_run_report_shape():
    code, report = run(RunConfig(command="correctness", protocol_id="P1",
                                 theta=0, samples=3, seed=7))
    assert code == 0 and report["pass"] is True
    assert report["schema_version"] == 1
    assert report["command"] == "correctness"
    assert report["config"]["protocol"] == "P1"
    assert report["config"]["seed"] == 7
    for check in report["checks"]:
        assert set(check) == {"name", "pass", "values"}


def test_run_rejects_bad_config():
    with pytest.raises(UsageError):
        run(RunConfig(command="sweep", n=9))
    with pytest.raises(UsageError):
        run(RunConfig(command="correctness", protocol_id=None))
    with pytest.raises(UsageError):
        run(RunConfig(command="sweep", p0=(0.0, 1.5)))
    with pytest.raises(UsageError):
        run(RunConfig(command="collaborative", group="nonsense"))
    with pytest.raises(UsageError):
        run(RunConfig(command="sweep", seed=-1))
    with pytest.raises(UsageError):
        run(RunConfig(command="correctness", protocol_id="P1", theta=8))


def test_sweep_csv_columns_and_values():
    lines = sweep_csv(RunConfig(command="sweep", n=2, p0=(0.0, 0.5, 1.0)))
    assert lines[0] == "n,p_0,p_1,p_2,delta_1,delta_2,advantage,bound"
    rows = [ln.split(",") for ln in lines[1:]]
    assert len(rows) == 3
    assert all(r[0] == "2" for r in rows)
    assert float(rows[0][6]) == pytest.approx(1 / 3, abs=1e-9)
    assert float(rows[2][6]) == pytest.approx(0.0, abs=1e-9)
    assert all(float(r[7]) == pytest.approx(1 / 3) for r in rows)


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["correctness", "--protocol", "P3", "--samples", "4",
            "--seed", "5", "--no-figures"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_report(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["twirl-check", "--which", "clifford", "--samples", "3",
            "--no-figures"]
    assert main(args + ["--seed", "1", "--out", str(a)]) == 0
    assert main(args + ["--seed", "2", "--out", str(b)]) == 0
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert ra["pass"] and rb["pass"]
    assert ra["pauli_weights"] != rb["pauli_weights"]


def test_env_seed_matches_flag(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["twirl-check", "--which", "clifford", "--samples", "2",
            "--no-figures"]
    monkeypatch.setenv("RSP_FORGE_SEED", "9")
    assert main(args + ["--out", str(a)]) == 0
    monkeypatch.delenv("RSP_FORGE_SEED")
    assert main(args + ["--seed", "9", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_bad_env_seed_is_usage_error(monkeypatch, capsys):
    monkeypatch.setenv("RSP_FORGE_SEED", "abc")
    assert main(["sweep", "--n", "2", "--p0", "0"]) == 2
    assert "RSP_FORGE_SEED" in capsys.readouterr().err


def test_usage_errors_exit_2():
    assert main(["nonsense"]) == 2
    assert main(["correctness"]) == 2  # --protocol is required here
    assert main(["sweep", "--n", "9", "--p0", "0"]) == 2
    assert main(["correctness", "--protocol", "P1", "--theta", "11"]) == 2


def test_failing_check_exits_1(tmp_path, monkeypatch, capsys):
    def forced(config):
        return {"checks": [cli._check("forced failure", False, gap=1.0)]}

    monkeypatch.setitem(cli._RUNNERS, "twirl-check", forced)
    out = tmp_path / "r.json"
    assert main(["twirl-check", "--out", str(out), "--no-figures"]) == 1
    report = json.loads(out.read_text())
    assert report["pass"] is False
    assert "FAIL (1 of 1)" in capsys.readouterr().out


def test_generic_csv_format(capsys):
    assert main(["correctness", "--protocol", "P1", "--theta", "2",
                 "--samples", "2", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "check,pass,metric,value"
    assert any(line.startswith("P1 theta=2 honest output,true,fidelity,")
               for line in lines)


def test_sweep_csv_through_main(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--n", "2", "--p0", "0", "1", "--format", "csv",
                 "--out", str(out), "--no-figures"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("n,p_0,")
    assert len(lines) == 3


def test_figures_written_next_to_report(tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["sweep", "--n", "2", "--p0", "0", "0.5", "1",
                 "--out", str(out)]) == 0
    png = tmp_path / "sweep.png"
    assert png.exists() and png.stat().st_size > 0


def test_no_figures_flag(tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["sweep", "--n", "2", "--p0", "0", "1", "--out", str(out),
                 "--no-figures"]) == 0
    assert not (tmp_path / "sweep.png").exists()


def test_twirl_figure(tmp_path):
    out = tmp_path / "tw.json"
    assert main(["twirl-check", "--which", "clifford", "--samples", "2",
                 "--seed", "3", "--out", str(out)]) == 0
    assert (tmp_path / "tw.png").exists()
