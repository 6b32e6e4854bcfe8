"""Command-line contract: exit codes, report schema, round-trip and determinism."""
import json
import subprocess
import sys

import pytest

from approxgroup import cli
from approxgroup.cli import RunConfig, dump_report, main, reverify, run


def _main(capsys, argv):
    status = main(argv)
    out = capsys.readouterr().out
    return status, (json.loads(out) if out.strip() else None)


def test_certify_example(capsys):
    status, rep = _main(capsys, ["certify", "--group", "ut_mod:3:5", "--set", "ball:gens=xy:r=2"])
    assert status == 0 and rep["schema"] == "approxgroup-lab/1" and rep["status"] == "ok"
    assert rep["input"]["group"]["kind"] == "ut_mod" and rep["reverified"]
    assert rep["result"]["certificate"]["K"] >= 1 and "timestamp" in rep


def test_decompose_subgroup(capsys):
    status, rep = _main(capsys, ["decompose", "--group", "ut_mod:3:3", "--set", "subgroup:z"])
    assert status == 0 and rep["result"]["chain"]["k"] == 0


def test_growth_no_gap(capsys):
    status, rep = _main(capsys, ["growth", "--group", "free:2", "--n", "10", "--c", "1"])
    assert status == 2 and rep["status"] == "hypothesis_violation"
    assert "gap not detected" in rep["message"]
    assert capsys.readouterr().err == ""  # stderr already consumed by _main


def test_error_exit(capsys):
    status, rep = _main(capsys, ["certify", "--group", "nonsense:1", "--set", "whole"])
    assert status == 1 and rep["status"] == "error"
    status, rep = _main(capsys, ["certify", "--group", "ut_mod:3:5"])
    assert status == 1
    status, rep = _main(capsys, ["growth", "--group", "free:2", "--n", "12", "--cap", "1000"])
    assert status == 1 and "cap" in rep["message"]
    status, rep = _main(capsys, ["torsion", "--group", "ut_mod:3:3", "--set", "whole"])
    assert status == 1


def test_hypothesis_exit_torsion(capsys):
    status, rep = _main(capsys, ["torsion", "--group", "ut_mod:3:5", "--set", "ball:gens=xy:r=1", "--r", "3"])
    assert status == 2 and rep["witness"] is not None


def test_bug_exit(monkeypatch):
    monkeypatch.setitem(cli._DISPATCH, "certify", lambda rec: ({"certificate": None}, False))
    status, rep = run(RunConfig("certify", group="ut_mod:3:3", set="whole"))
    assert status == 3 and rep["status"] == "bug"


CASES = [
    ["doubling", "--group", "abelian:0", "--set", "interval:4"],
    ["certify", "--group", "ut_mod:3:5", "--set", "ball:gens=xy:r=2"],
    ["decompose", "--group", "abelian:101", "--set", "interval:3"],
    ["structure", "--group", "ut_mod:3:5", "--set", "ball:gens=xy:r=2"],
    ["structure", "--group", "abelian:0", "--set", "interval:2", "--family", '{"mod_range": [2, 300]}'],
    ["progression", "--group", "ut_mod:3:5", "--set", "ball:gens=xy:r=2"],
    ["torsion", "--group", "abelian:3,3,3", "--set", '{"ball": {"gens": [[1, 0, 0], [0, 1, 0]], "radius": 1}}', "--r", "3"],
    ["growth", "--group", "abelian:0", "--n", "100", "--c", "1"],
    ["growth", "--group", "ut_mod:3:5", "--n", "41", "--certificate"],
]


@pytest.mark.parametrize("argv", CASES, ids=lambda a: a[0] + ":" + a[2])
def test_round_trip_and_determinism(capsys, argv):
    status, rep = _main(capsys, argv)
    assert status == 0, rep.get("message")
    # the serialized report re-verifies after reloading
    assert reverify(json.loads(dump_report(rep)))
    status2, rep2 = _main(capsys, argv)
    assert dump_report(rep, timestamp=False) == dump_report(rep2, timestamp=False)


def test_tampered_reports_fail(capsys):
    _, rep = _main(capsys, ["certify", "--group", "ut_mod:3:5", "--set", "ball:gens=xy:r=2"])
    cert = rep["result"]["certificate"]
    cert["cover"] = cert["cover"][:-1]
    cert["K"] -= 1
    assert not reverify(rep)
    _, rep = _main(capsys, ["decompose", "--group", "abelian:101", "--set", "interval:3"])
    rep["result"]["chain"]["gamma"] = [[1]]
    assert not reverify(rep)
    _, rep = _main(capsys, ["structure", "--group", "ut_mod:3:5", "--set", "ball:gens=xy:r=2"])
    rep["result"]["structure"]["step"] += 1
    assert not reverify(rep)


def test_config_file_and_outputs(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"group": "abelian:0", "n": 120, "c": 1.0}))
    out, table = tmp_path / "r.json", tmp_path / "g.csv"
    status = main(["growth", "--config", str(cfg), "--out", str(out), "--csv", str(table)])
    assert status == 0
    rep = json.loads(out.read_text())
    assert rep["input"]["n"] == 120 and rep["result"]["gap_at_n"]
    assert table.read_text().splitlines()[0] == "n,size,threshold,flag"
    grp = tmp_path / "g.json"
    grp.write_text(json.dumps({"kind": "ut_mod", "n": 3, "m": 3}))
    assert main(["certify", "--group", "@" + str(grp), "--set", "whole"]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["certify", "--config", str(bad)]) == 1


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "approxgroup.cli", "doubling", "--group", "abelian:0", "--set", "interval:2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["doubling"] == "9/5"
