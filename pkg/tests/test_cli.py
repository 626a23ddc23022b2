import csv
import io
import json
import os
import re
import subprocess
import sys

import pytest

from nptasmc.cli import histogram, main
from nptasmc.monitor import Outcome
from nptasmc.model import validate
from nptasmc.text import parse_model, parse_run

Q_TIME = "Pr[time<=2](<> T.T3)"


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("examples")
    assert main(["examples", "--out", str(d)]) == 0
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- histogram -----------------------------------------------------------------------


def test_histogram_examples():
    h = histogram([Outcome(False)] * 3, 4, 2.0)
    assert h.counts == (0, 0, 0, 0) and h.cumulative == (0, 0, 0, 0) and h.total == 3
    h = histogram([Outcome(True, 1.0, 1.0)], 2, 2.0)
    assert h.counts == (0, 1)
    h = histogram([Outcome(True, 2.0, 2.0), Outcome(True, 0.0, 0.0)], 2, 2.0)
    assert h.counts == (1, 1) and h.cumulative[-1] == 1.0
    with pytest.raises(ValueError):
        histogram([], 0, 1.0)


# -- commands ------------------------------------------------------------------------


def test_examples_listing(capsys, files):
    code, out, _ = run(capsys, "examples")
    names = {r["name"] for r in json.loads(out)["examples"]}
    assert code == 0 and {"abt", "ab_t", "abrt", "traingate6", "dpa_4_4_3"} <= names
    assert sorted(p.name for p in files.iterdir() if p.suffix == ".nptam") == sorted(f"{n}.nptam" for n in names)


def test_validate(capsys, files):
    code, out, _ = run(capsys, "validate", "--model", files / "abt.nptam")
    assert code == 0
    rec = json.loads(out)
    assert rec["valid"] and rec["components"] == ["A", "B", "T"]


def test_validate_broken_model(capsys, tmp_path):
    bad = tmp_path / "bad.nptam"
    bad.write_text("network N\nautomaton P\n  action out a\n  location L\n  initial L\n  edge L -> L on a!\nend\n")
    code, _, err = run(capsys, "validate", "--model", bad)
    assert code == 1 and "MissingExpRate" in err
    bad.write_text("network N\nautomaton P\n  location\n")
    code, _, err = run(capsys, "validate", "--model", bad)
    assert code == 1 and "3:" in err


def test_usage_errors(capsys, files, tmp_path):
    assert run(capsys, "estimate", "--query", Q_TIME)[0] == 2
    assert run(capsys, "estimate", "--model", tmp_path / "missing.nptam", "--query", Q_TIME)[0] == 2
    assert run(capsys, "compare", "--model", files / "abt.nptam", "--query", Q_TIME)[0] == 2
    assert run(capsys, "estimate", "--model", files / "abt.nptam", "--query", Q_TIME, "--epsilon", "2")[0] == 2
    assert run(capsys, "test", "--model", files / "abt.nptam", "--query", Q_TIME)[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["estimate", "--jobs", "0"])
    assert info.value.code == 2


def test_unknown_observer_is_a_model_error(capsys, files):
    code, _, err = run(capsys, "estimate", "--model", files / "abt.nptam", "--query", "Pr[q<=2](<> T.T3)")
    assert code == 1 and "observer q" in err


def test_estimate(capsys, files):
    code, out, _ = run(capsys, "estimate", "--model", files / "abt.nptam", "--query", files / "abt.npq",
                       "--epsilon", "0.05", "--delta", "0.05", "--seed", 7)
    rec = json.loads(out)
    assert code == 0 and rec["N"] == 4794
    assert abs(rec["p_hat"] - 0.75) < 0.05
    assert rec["params"] == {"seed": 7, "delta": 0.05, "epsilon": 0.05}


@pytest.mark.slow
def test_estimate_full_precision(capsys, files):
    code, out, _ = run(capsys, "estimate", "--model", files / "abt.nptam", "--query", Q_TIME,
                       "--epsilon", "0.01", "--delta", "0.01", "--seed", 7)
    rec = json.loads(out)
    assert rec["N"] == 184207
    assert 0.73 <= rec["p_hat"] <= 0.77


def test_outputs_are_byte_identical(capsys, files, tmp_path):
    argv = ["estimate", "--model", files / "abrt.nptam", "--query", Q_TIME, "--epsilon", "0.1", "--seed", 3,
            "--format", "csv"]
    a = run(capsys, *argv)[1]
    b = run(capsys, *argv)[1]
    assert a == b and "\r" not in a
    assert run(capsys, *argv, "--out", tmp_path / "x.csv")[0] == 0
    assert (tmp_path / "x.csv").read_bytes() == a.encode()


@pytest.mark.invariant
@pytest.mark.parametrize("argv", [
    ["estimate", "--query", Q_TIME, "--epsilon", "0.05"],
    ["compare", "--query", Q_TIME, "--model2", "ab_t"],
    ["pcompare", "--query", "Pr[C<=6](<> T.T3)", "--model2", "ab_t", "--N", "6"],
    ["test", "--query", Q_TIME + " >= 0.7"],
])
def test_jobs_do_not_change_artifacts(capsys, files, argv):
    argv = [files / f"{a}.nptam" if a == "ab_t" else a for a in argv]
    base = ["--model", files / "abt.nptam", "--seed", 11]
    one = run(capsys, *argv, *base, "--jobs", 1)
    three = run(capsys, *argv, *base, "--jobs", 3)
    assert one[0] == 0 and one[1] == three[1]


def test_sprt_command(capsys, files):
    code, out, _ = run(capsys, "test", "--model", files / "abt.nptam", "--query", Q_TIME + " >= 0.7")
    rec = json.loads(out)
    assert code == 0 and rec["decision"] == "H0" and rec["holds"] is True
    code, out, _ = run(capsys, "test", "--model", files / "abt.nptam", "--query", Q_TIME + " >= 0.8")
    rec = json.loads(out)
    assert rec["decision"] == "H1" and rec["holds"] is False
    code, out, _ = run(capsys, "test", "--model", files / "abt.nptam", "--query", Q_TIME, "--theta", 0.5,
                       "--delta0", 0.05, "--delta1", 0.05)
    assert json.loads(out)["holds"] is None


def test_compare_command(capsys, files):
    code, out, _ = run(capsys, "compare", "--model", files / "abt.nptam", "--model2", files / "ab_t.nptam",
                       "--query", Q_TIME, "--seed", 1)
    rec = json.loads(out)
    assert code == 0 and rec["verdict"] == "process1-superior"
    assert rec["informative"] <= rec["pairs"]
    assert set(rec["params"]) >= {"a", "r", "c", "u0", "u1", "seed"}


def test_pcompare_rows(capsys, files):
    code, out, _ = run(capsys, "pcompare", "--model", files / "abt.nptam", "--model2", files / "ab_t.nptam",
                       "--query", "Pr[C<=6](<> T.T3)", "--N", 3, "--format", "csv", "--seed", 2)
    table = rows(out)
    assert code == 0 and [r["index"] for r in table] == ["1", "2", "3"]
    assert [float(r["bound"]) for r in table] == [2.0, 4.0, 6.0]
    assert set(table[0]) == {"index", "bound", "result", "verdict", "informative"}
    code, _, _ = run(capsys, "pcompare", "--model", files / "abt.nptam", "--query", "Pr[C<=6](<> T.T3)",
                     "--query2", Q_TIME)
    assert code == 2


def test_oracle_command(capsys, files):
    code, out, _ = run(capsys, "oracle", "--model", files / "abrt.nptam", "--query", Q_TIME)
    rec = json.loads(out)
    assert code == 0 and abs(rec["probability"] - 0.4190) < 1e-3 and rec["error_bound"] < 1e-6


def test_simulate_traces_parse_back(capsys, files):
    code, out, _ = run(capsys, "simulate", "--model", files / "abt.nptam", "--bound", 2, "--runs", 3,
                       "--format", "csv")
    model = validate(parse_model((files / "abt.nptam").read_text()))
    traces = [t for t in re.split(r"(?m)^(?=run )", out) if t]
    assert code == 0 and len(traces) == 3
    for t in traces:
        assert parse_run(t, model).bound == 2
    code, out, _ = run(capsys, "simulate", "--model", files / "abt.nptam", "--query", Q_TIME)
    rec = json.loads(out)
    assert rec["runs"][0]["outcome"]["satisfied"] in (True, False)
    assert run(capsys, "simulate", "--model", files / "abt.nptam")[0] == 2


def test_hist_cumulative_is_nondecreasing(capsys, files):
    code, out, _ = run(capsys, "hist", "--model", files / "abt.nptam", "--query", Q_TIME, "--bins", 50,
                       "--runs", 2000, "--format", "csv")
    table = rows(out)
    cum = [float(r["cumulative"]) for r in table]
    assert code == 0 and len(table) == 50
    assert all(a <= b for a, b in zip(cum, cum[1:])) and cum[-1] <= 1
    assert sum(int(r["count"]) for r in table) <= 2000


@pytest.mark.slow
def test_hist_reaches_published_value(capsys, files):
    code, out, _ = run(capsys, "hist", "--model", files / "abt.nptam", "--query", Q_TIME, "--bins", 50,
                       "--runs", 100_000)
    rec = json.loads(out)
    assert abs(rec["rows"][-1]["cumulative"] - 0.75) < 0.01
    assert rec["total"] == 100_000


def test_seed_from_environment(files):
    cmd = [sys.executable, "-m", "nptasmc", "estimate", "--model", str(files / "abt.nptam"), "--query", Q_TIME,
           "--epsilon", "0.2"]
    env = {**os.environ, "NPTASMC_SEED": "99"}
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["params"]["seed"] == 99
