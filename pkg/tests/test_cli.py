import json
import os
import subprocess
import sys

import pytest

from unilab.cli import SUBCOMMANDS, main


def run_cli(*args, cwd=None):
    proc = subprocess.run([sys.executable, "-m", "unilab", *args], capture_output=True, text=True, cwd=cwd)
    return proc.returncode, proc.stdout, proc.stderr


def read_report(out):
    with open(os.path.join(out, "report.json"), encoding="utf-8") as fh:
        return json.load(fh)


FAST = {
    "classify-weights": [],
    "check-criterion": [],
    "eigenfield": [],
    "factor-map": ["--samples", "500"],
    "correlations": ["--samples", "20000"],
    "build-interleaved": [],
    "rokhlin-step": ["--samples", "500", "--set", "towerSamples=5000"],
}


@pytest.mark.parametrize("command", sorted(SUBCOMMANDS))
def test_every_subcommand_runs(command, tmp_path):
    out = str(tmp_path / "out")
    code = main([command, "--out", out, *FAST[command]])
    assert code == 0
    rep = read_report(out)
    assert rep["schema"] == "unilab.report/1"
    assert rep["subcommand"] == command
    assert rep["verification"]["passed"] is True
    assert "timings" not in rep


def test_unknown_key_exits_2_and_writes_nothing(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"weights": 2.0, "colour": "red"}))
    out = tmp_path / "out"
    code, _, err = run_cli("classify-weights", "--config", str(cfg), "--out", str(out))
    assert code == 2
    assert json.loads(err)["error"]["exitCode"] == 2
    assert not out.exists()


def test_nested_unknown_key(tmp_path):
    out = tmp_path / "out"
    code, _, err = run_cli("rokhlin-step", "--set", 'small={"N": 8, "height": 3}', "--out", str(out))
    assert code == 2 and "small.height" in err and not out.exists()


def test_bad_flag_exits_2(tmp_path):
    code, _, err = run_cli("classify-weights", "--no-such-flag", cwd=str(tmp_path))
    assert code == 2 and "error" in json.loads(err)


def test_verification_failure_exits_3_with_report(tmp_path):
    out = str(tmp_path / "out")
    code = main(["classify-weights", "--set", "weights=1.0", "--set", 'expect="Yes"', "--out", out])
    assert code == 3
    assert read_report(out)["results"]["universal"] == "No"


def test_config_then_flags_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"horizon": 32, "p": 1.0}))
    out = str(tmp_path / "out")
    assert main(["classify-weights", "--config", str(cfg), "--p", "3", "--out", out]) == 0
    used = read_report(out)["config"]
    assert used["horizon"] == 32 and used["p"] == 3.0


def test_rokhlin_step_is_byte_reproducible(tmp_path):
    texts = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert main(["rokhlin-step", "--out", out, *FAST["rokhlin-step"], "--seed", "5"]) == 0
        with open(os.path.join(out, "report.json"), "rb") as fh:
            texts.append(fh.read())
    assert texts[0] == texts[1]


def test_format_json_skips_csv(tmp_path):
    out = tmp_path / "out"
    assert main(["build-interleaved", "--format", "json", "--out", str(out)]) == 0
    assert sorted(os.listdir(out)) == ["report.json"]
    out2 = tmp_path / "out2"
    assert main(["build-interleaved", "--out", str(out2)]) == 0
    assert "schedule.csv" in os.listdir(out2)


def test_timings_flag(tmp_path):
    out = str(tmp_path / "out")
    assert main(["check-criterion", "--timings", "--out", out]) == 0
    assert read_report(out)["timings"]["totalSeconds"] >= 0


def test_kalish_report_records_both_formulas(tmp_path):
    out = str(tmp_path / "out")
    assert main(["eigenfield", "--field", "kalishF", "--M", "1024", "--mode", "analytic", "--out", out]) == 0
    res = read_report(out)["results"]
    assert res["pairing"]["exactVsShiftedFormula"] <= 1e-12
    assert res["pairing"]["exactVsPureImaginaryFormula"] > 0.5
    assert res["closedFormVsTable"] <= 1e-12
