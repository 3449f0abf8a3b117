import json
import math
import subprocess
import sys

import pytest

from cylstable import cli


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants_cauchy(capsys):
    code, out, _ = run(["constants", "--alpha", "1.0"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["tail_constant"] == pytest.approx(1 / math.pi, rel=1e-8)
    assert d["c_alpha"] == pytest.approx(math.pi / 2, rel=1e-8)
    assert d["config"]["alpha"] == 1.0 and "version" in d


@pytest.mark.parametrize("argv", [
    ["integrate", "--alpha", "2.0", "--integrand", "constant"],
    ["constants", "--alpha", "0"],
    ["sample", "--alpha", "1.0", "--grid", "0,0.5,0.3,1"],
    ["sample", "--bogus"],
    ["integrate", "--alpha", "1.0", "--integrand", "constant", "--params", '{"nope": 1}'],
    ["verify", "--suite", "nope"],
    [],
])
def test_configuration_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err


def test_sample_csv(tmp_path, capsys):
    out = tmp_path / "p.csv"
    code, _, _ = run(["sample", "--alpha", "1.5", "--grid", "1:4", "--samples", "3", "--seed", "9",
                      "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# cylstable")
    cfg = json.loads(lines[1][len("# config "):])
    assert cfg["seed"] == 9 and cfg["alpha"] == 1.5
    assert len([l for l in lines if not l.startswith("#")]) == 1 + 3 * 4


def test_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"alpha": 0.7, "seed": 3}))
    code, out, _ = run(["constants", "--config", str(conf)], capsys)
    assert code == 0 and json.loads(out)["alpha"] == 0.7
    code, out, _ = run(["constants", "--config", str(conf), "--alpha", "1.2"], capsys)
    assert json.loads(out)["alpha"] == 1.2


def test_integrate_rows_and_reproducibility(tmp_path, capsys):
    argv = ["integrate", "--alpha", "1.0", "--integrand", "power_law", "--params", '{"beta": 0.5}',
            "--grid", "1:64", "--levels", "2:6", "--scenarios", "4", "--seed", "5"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert rows[0] == "scenario,level,I0,I1,cauchy_increment,converged"
    assert len(rows) == 1 + 4 * 5
    _, again, _ = run(argv + ["--threads", "3"], capsys)
    assert again == out


def test_rerun_embedded_config(tmp_path, capsys):
    argv = ["sample", "--alpha", "0.9", "--grid", "2:3", "--samples", "2", "--seed", "4"]
    _, first, _ = run(argv, capsys)
    cfg = json.loads(first.splitlines()[1][len("# config "):])
    conf = tmp_path / "cfg.json"
    conf.write_text(json.dumps({k: v for k, v in cfg.items() if k != "command"}))
    _, second, _ = run(["sample", "--config", str(conf)], capsys)
    assert second == first


def test_decouple_report(capsys):
    code, out, _ = run(["decouple", "--alpha", "1.2", "--integrand", "random_partition",
                        "--params", '{"cells": 4}', "--grid", "1:4", "--scenarios", "2000", "--seed", "1"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["charfn"]["worst_deviation"] < d["charfn"]["tolerance"]
    assert 0 < d["identity"]["forward"]["value"] < 10


def test_verify_byte_identical_and_exit_codes(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.run(["verify", "--suite", "all", "--seed", "42", "--quick", "--out", str(a)]) == 0
    assert cli.run(["verify", "--suite", "all", "--seed", "42", "--quick", "--threads", "4",
                    "--out", str(b)]) == 0
    err = capsys.readouterr().err
    assert "[PASS]" in err and "[FAIL]" not in err
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["schema"].startswith("cylstable.report/")


def test_verify_failure_exits_1(monkeypatch, capsys):
    from cylstable import verify

    def failing(seed=0, quick=False):
        rep = verify.ExperimentReport("broken", {})
        rep.check("impossible", False, 1.0, "< 0")
        return rep

    monkeypatch.setitem(verify.SUITES, "broken", failing)
    assert cli.run(["verify", "--suite", "broken"]) == 1
    assert "[FAIL] broken" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "cylstable", "constants", "--alpha", "1.5"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["alpha"] == 1.5
