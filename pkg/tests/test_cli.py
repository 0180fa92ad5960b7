import json

import jsonschema
import pytest

from ldalattice import cli
from ldalattice.experiments import CURVE_COLUMNS, load_schema, read_output
from ldalattice.expander import read_graph


@pytest.fixture
def files(tmp_path):
    g = tmp_path / "g.txt"
    lat = tmp_path / "l.json"
    assert cli.main(["gen-graph", "--n", "8", "--dv", "3", "--dc", "4", "--seed", "3",
                     "--out", str(g)]) == 0
    assert cli.main(["build", "--graph", str(g), "--p", "11", "--seed", "0", "--out", str(lat)]) == 0
    params = tmp_path / "ps.json"
    params.write_text(json.dumps({"R": 1 / 3, "lam": 12, "alpha": 1.5, "A": 4, "beta": 2.5,
                                  "B": 10, "omega": 0.2}))
    return {"graph": g, "lattice": lat, "params": params, "dir": tmp_path}


def test_graph_round_trip(files):
    g = read_graph(files["graph"])
    assert (g.n, g.dv, g.dc) == (8, 3, 4)


def test_decode_sim_csv(files):
    out = files["dir"] / "wer.csv"
    code = cli.main(["decode-sim", "--lattice", str(files["lattice"]), "--sigma-grid", "0.5,1.0",
                     "--trials", "200", "--out", str(out)])
    assert code == 0
    rows, cfg = read_output(out)
    assert [r["sigma"] for r in rows] == [0.5, 1.0]
    assert cfg["seed"] == 0 and cfg["schema_version"] == 1
    header = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][0]
    assert header.split(",") == list(CURVE_COLUMNS)


def test_report_json_matches_schema(files):
    out = files["dir"] / "rep.json"
    code = cli.main(["report", "--graph", str(files["graph"]), "--p", "11", "--seeds", "0,1",
                     "--nsm-samples", "200", "--wer-trials", "50", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, load_schema("output"))
    jsonschema.validate(doc["result"], load_schema("goodness_report"))


@pytest.mark.parametrize("cmd", [
    ["metrics", "--lattice", "{lattice}", "--nsm-samples", "300"],
    ["check-expansion", "--graph", "{graph}", "--alpha", "1", "--A", "1.5", "--beta", "1.6",
     "--B", "3"],
    ["fullrank-mc", "--graph", "{graph}", "--p", "5", "--trials", "100"],
    ["syndrome-test", "--graph", "{graph}", "--p", "5", "--u", "1,0,0,0,0,0", "--trials", "500"],
    ["bounds", "--params", "{params}", "--n-grid", "1e2:1e4:log10"],
    ["bounds", "--params", "{params}", "--format", "json"],
    ["semi-ergodic", "--n-grid", "10,100", "--trials", "300"],
])
def test_commands_succeed(files, cmd, tmp_path):
    out = tmp_path / "o.txt"
    argv = [a.format(**files) for a in cmd] + ["--out", str(out)]
    assert cli.main(argv) == 0
    assert out.read_text().strip()
    read_output(out)


def test_stdout_output(files, capsys):
    assert cli.main(["semi-ergodic", "--n-grid", "10", "--trials", "50"]) == 0
    assert capsys.readouterr().out.splitlines()[-2].startswith("n,trials")


def test_exit_code_budget(files):
    code = cli.main(["decode-sim", "--lattice", str(files["lattice"]), "--sigma-grid", "0.5",
                     "--trials", "10", "--budget", "10", "--out", str(files["dir"] / "x.csv")])
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["build", "--graph", "{graph}", "--p", "4"],
    ["build", "--graph", "{graph}"],
    ["fullrank-mc", "--graph", "{graph}", "--p", "5", "--trials", "0"],
    ["metrics", "--lattice", "missing.json"],
    ["semi-ergodic", "--noise", "student_t_iid", "--df", "1.5", "--n-grid", "10"],
    ["semi-ergodic", "--workers", "0"],
    ["syndrome-test", "--graph", "{graph}", "--p", "5", "--u", "1,0"],
])
def test_exit_code_invalid_config(files, argv, tmp_path):
    argv = [a.format(**files) for a in argv] + ["--out", str(tmp_path / "o")]
    assert cli.main(argv) == 3


def test_usage_errors_exit_3():
    with pytest.raises(SystemExit) as e:
        cli.main(["decode-sim"])
    assert e.value.code == 3
    with pytest.raises(SystemExit) as e:
        cli.main(["no-such-command"])
    assert e.value.code == 3


def test_bad_params_file(files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"R": 0.5, "lam": 3, "alpha": 1, "A": 4, "beta": 2, "B": 8,
                               "gamma": 1}))
    assert cli.main(["bounds", "--params", str(bad), "--out", str(tmp_path / "o")]) == 3
