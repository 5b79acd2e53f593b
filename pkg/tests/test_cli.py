import csv
import json

import pytest

from jensentrace import __version__, cli
from jensentrace.cli import CampaignConfig, ConfigError, exit_status, main
from jensentrace.suites import CANDIDATE, SUITES, Suite, describe
from jensentrace.verifiers import FAIL, PASS, PRECONDITION, make_report


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# --------------------------------------------------------------------------
# configuration


@pytest.mark.parametrize(
    "doc",
    [
        {},
        {"suites": []},
        {"suites": ["nope"]},
        {"suites": ["thm2"], "seeds": 0},
        {"suites": ["thm2"], "dims": "3..2"},
        {"suites": ["thm2"], "dims": "a..b"},
        {"suites": ["thm2"], "functions": ["nope"]},
        {"suites": ["thm2"], "tolerances": {"thm2": -1}},
        {"suites": ["thm2"], "tolerances": {"nope": 1e-9}},
        {"suites": ["thm2"], "output": {"format": "xml"}},
        {"suites": ["thm2"], "workers": 0},
        {"suites": ["thm2"], "extra": 1},
        {"suites": ["thm2"], "options": {"thm2": 3}},
    ],
)
def test_invalid_configs_rejected(doc):
    with pytest.raises(ConfigError):
        CampaignConfig.from_dict(doc)


def test_config_cells_and_tolerances():
    cfg = CampaignConfig.from_dict({
        "suites": ["thm2", "sin_lp", "rst_search"], "seeds": {"base": 5, "count": 2}, "dims": "2..3",
        "functions": ["square", "exp"], "tolerances": {"default": 1e-8, "thm2": 1e-10},
        "options": {"rst_search": {"trials": 3}},
    })
    cells = cfg.cells()
    grid = [c for c in cells if c.suite == "thm2"]
    assert len(grid) == 2 * 2 * 2 and {c.seed for c in grid} == {5, 6}
    assert all(c.tol == 1e-10 for c in grid)
    assert [c.suite for c in cells].count("sin_lp") == 1
    rst = [c for c in cells if c.suite == "rst_search"]
    assert len(rst) == 2 and rst[0].opts["trials"] == 3 and rst[0].opts["dims"] == (2, 3)
    assert rst[0].tol == 1e-8
    assert [c.index for c in cells] == list(range(len(cells)))


def test_exit_status_priority():
    assert exit_status([PASS], 0) == 0
    assert exit_status([PASS, PRECONDITION], 0) == 1
    assert exit_status([FAIL, CANDIDATE], 0) == 3
    assert exit_status([FAIL, CANDIDATE], 1) == 2


# --------------------------------------------------------------------------
# commands


def test_version_and_describe(capsys):
    code, out, _ = _run(["version"], capsys)
    assert code == 0 and out.strip() == __version__
    code, out, _ = _run(["describe", "thm7"], capsys)
    assert code == 0 and "centralizer" in out and "report columns" in out
    assert "compatib" in describe("cor11")
    assert "OPEN QUESTION" in describe("rst_search")
    code, _, err = _run(["describe", "nope"], capsys)
    assert code == 4 and "unknown suite" in err


def test_parse_errors_exit_4(capsys, tmp_path):
    assert _run(["run", "--suites"], capsys)[0] == 4
    assert _run(["run", "--suites", "thm2", "--dims", "0..2"], capsys)[0] == 4
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(["run", "--config", str(bad)], capsys)[0] == 4
    assert _run(["bogus"], capsys)[0] == 4


def test_thm2_campaign_passes(capsys, tmp_path):
    out = tmp_path / "r.jsonl"
    code, _, err = _run(["run", "--suites", "thm2", "--seeds", "20", "--dims", "2..3", "--out", str(out)], capsys)
    assert code == 0 and "exit 0" in err
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(rows) == 40 and all(r["verdict"] == PASS for r in rows)
    assert list(rows[0])[:8] == ["inequality-id", "paper-ref", "seed", "lhs", "rhs", "gap", "tol", "verdict"]


def test_non_convex_function_gives_exit_1(capsys):
    code, out, _ = _run(["run", "--suites", "thm2", "--functions", "sin", "--seeds", "2", "--dims", "2..2"], capsys)
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 1 and all(r["verdict"] == PRECONDITION for r in rows)
    assert all(r["lhs"] is None for r in rows)


def test_sin_lp_campaign(capsys):
    code, out, _ = _run(["run", "--suites", "sin_lp"], capsys)
    row = json.loads(out)
    assert code == 0 and row["rhs"] > 0.02533 + 1e-4 and row["verdict"] == PASS


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"suites": ["two_factor"], "seeds": 3, "dims": [2, 2]}))
    out = tmp_path / "r.csv"
    code, _, _ = _run(["run", "--config", str(cfg), "--seeds", "4", "--format", "csv", "--out", str(out)], capsys)
    rows = list(csv.DictReader(out.open()))
    assert code == 0 and len(rows) == 4 and rows[0]["inequality-id"] == "two_factor"


def test_reruns_are_byte_identical(capsys, tmp_path):
    args = ["run", "--suites", "thm7", "cor10", "cor13", "--seeds", "3", "--dims", "2..2"]
    paths = [tmp_path / f"{i}.jsonl" for i in range(3)]
    _run(args + ["--out", str(paths[0])], capsys)
    _run(args + ["--out", str(paths[1])], capsys)
    _run(args + ["--out", str(paths[2]), "--workers", "2"], capsys)
    assert paths[0].read_bytes() == paths[1].read_bytes() == paths[2].read_bytes()


# --------------------------------------------------------------------------
# anomaly and candidate handling, with patched runners


def _patch(monkeypatch, sid, verdict):
    def fake(cell):
        rep = make_report(sid, 2.0, 1.0, cell.tol, guaranteed=True, seed=cell.seed)
        if verdict == CANDIDATE:
            rep.verdict, rep.guaranteed = CANDIDATE, False
        return rep, {"generators": [{"generator": "fake", "seed": cell.seed}]}

    old = SUITES[sid]
    monkeypatch.setitem(SUITES, sid, Suite(old.id, old.default_function, old.preconditions, old.cells, fake))


def test_anomaly_exit_2_dumps_instance(capsys, tmp_path, monkeypatch):
    _patch(monkeypatch, "thm2", FAIL)
    out = tmp_path / "r.jsonl"
    code, _, err = _run(["run", "--suites", "thm2", "--seeds", "1", "--dims", "2..2", "--out", str(out)], capsys)
    assert code == 2 and "anomaly" in err
    dump = json.loads((tmp_path / "r.jsonl.cell0.anomaly.json").read_text())
    assert dump["kind"] == "anomaly" and dump["manifest"]["generators"][0]["generator"] == "fake"
    assert dump["report"]["verdict"] == FAIL


def test_candidate_exit_3(capsys, tmp_path, monkeypatch):
    _patch(monkeypatch, "rst_search", CANDIDATE)
    monkeypatch.chdir(tmp_path)
    code, out, _ = _run(["run", "--suites", "rst_search", "thm2", "--seeds", "1", "--dims", "2..2"], capsys)
    assert code == 3
    assert (tmp_path / "jensentrace.cell0.candidate.json").exists()
    assert json.loads(out.splitlines()[0])["verdict"] == CANDIDATE


def test_rst_campaign_reports_outcome(capsys):
    cfg = CampaignConfig.from_dict({"suites": ["rst_search"], "seeds": 1, "dims": [2, 3],
                                    "options": {"rst_search": {"trials": 50, "arm": "compatible"}}})
    code = cli.run(cfg)
    row = json.loads(capsys.readouterr().out)
    assert code == 0 and row["verdict"] == PASS
