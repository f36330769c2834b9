import json

import pytest

from antibenford.cli import EXIT_ERROR, EXIT_NOT_FOUND, EXIT_OK, NOT_FOUND_MSG, main


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _synth(*extra):
    return main(["synth", "--graph", "g.csv", "--truth", "t.json", *extra])


def test_help_exits_zero(capsys):
    for sub in ([], ["detect"], ["synth"], ["eval"], ["export"], ["stats"]):
        with pytest.raises(SystemExit) as exc:
            main(sub + ["--help"])
        assert exc.value.code == 0


def test_synth_defaults(workdir):
    assert _synth() == EXIT_OK
    truth = json.loads((workdir / "t.json").read_text())
    assert len(truth["anomalous"]) == 3 and all(len(s) == 80 for s in truth["anomalous"])
    assert len(set(truth["clusters"].values())) == 9
    assert len(truth["clusters"]) == 720
    header = (workdir / "g.csv").read_text().splitlines()[0]
    assert header == "src,dst,value"


def test_synth_byte_identical(workdir):
    assert _synth("--seed", "7") == EXIT_OK
    first = (workdir / "g.csv").read_bytes(), (workdir / "t.json").read_bytes()
    assert _synth("--seed", "7") == EXIT_OK
    assert ((workdir / "g.csv").read_bytes(), (workdir / "t.json").read_bytes()) == first
    assert _synth("--seed", "8") == EXIT_OK
    assert (workdir / "g.csv").read_bytes() != first[0]


def test_synth_rejects_bad_spec(workdir, capsys):
    assert _synth("--anomalous-size", "0") == EXIT_ERROR
    assert "error" in capsys.readouterr().err
    assert _synth("--digits", "1,2", "--anomalous-sizes", "40") == EXIT_ERROR
    assert _synth("--null", "--nodes", "10", "--avg-degree", "50") == EXIT_ERROR


def test_detect_recovers_planted(workdir, capsys):
    assert _synth("--digits", "1,3,5,7,9") == EXIT_OK
    capsys.readouterr()
    code = main(["detect", "-i", "g.csv", "-o", "r.json", "--threads", "1", "--digits-out", "d.csv",
                 "--scores-out", "s.jsonl", "--histogram-out", "h.csv", "--trace-out", "tr.csv"])
    assert code == EXIT_OK
    table = capsys.readouterr().out.splitlines()
    assert table[0].split() == ["metric", "1st", "2nd", "3rd", "4th", "5th", "global"]
    assert [line.split()[0] for line in table[1:]] == ["chi2", "psi", "|E|/|S|", "|S|"]
    assert table[4].split()[1:6] == ["80"] * 5
    reports = json.loads((workdir / "r.json").read_text())
    assert [r["rank"] for r in reports] == [1, 2, 3, 4, 5]
    assert all(r["significant"] for r in reports)
    assert len((workdir / "s.jsonl").read_text().splitlines()) == 11 * 80
    assert (workdir / "d.csv").read_text().splitlines()[0].count(",") == 7
    assert (workdir / "tr.csv").read_text().startswith("step,removed_node,suffix_density")
    assert (workdir / "h.csv").read_text().startswith("bin_lo,bin_hi,count")

    assert main(["eval", "--report", "r.json", "--truth", "t.json"]) == EXIT_OK
    ev = json.loads(capsys.readouterr().out)
    assert ev["detection"]["f1"] == 1.0


def test_detect_byte_identical(workdir, capsys):
    _synth("--seed", "3")
    runs = []
    for name in ("a.json", "b.json"):
        assert main(["detect", "-i", "g.csv", "-o", name, "--k", "3"]) == EXIT_OK
        runs.append((workdir / name).read_bytes())
    assert runs[0] == runs[1]
    outs = capsys.readouterr().out
    half = len(outs) // 2
    assert outs[:half] == outs[half:]


def test_detect_null_exit_code(workdir, capsys):
    assert _synth("--null", "--nodes", "500", "--avg-degree", "40", "--seed", "0") == EXIT_OK
    code = main(["detect", "-i", "g.csv", "-o", "r.json"])
    assert code == EXIT_NOT_FOUND
    assert NOT_FOUND_MSG in capsys.readouterr().err
    assert json.loads((workdir / "r.json").read_text()) == []


def test_detect_missing_input(workdir, capsys):
    assert main(["detect", "-i", "nope.csv"]) == EXIT_ERROR
    assert "not found" in capsys.readouterr().err


def test_detect_bad_tau(workdir):
    _synth()
    assert main(["detect", "-i", "g.csv", "--tau", "1"]) == EXIT_ERROR


def test_eval_truth_against_itself_and_labels(workdir, capsys):
    _synth()
    capsys.readouterr()
    assert main(["eval", "--report", "t.json", "--truth", "t.json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["detection"]["f1"] == 1.0

    truth = json.loads((workdir / "t.json").read_text())
    (workdir / "labels.csv").write_text(
        "node_key,label\n" + "".join(f"{k},{c}\n" for k, c in truth["clusters"].items())
    )
    assert main(["eval", "--report", "t.json", "--labels", "labels.csv"]) == EXIT_OK
    purity = json.loads(capsys.readouterr().out)["purity"]
    assert [p["entropy"] for p in purity] == [0.0, 0.0, 0.0]


def test_eval_mismatched_keys(workdir, capsys):
    _synth()
    (workdir / "r.json").write_text(json.dumps([{"rank": 1, "nodes": ["ghost"]}]))
    assert main(["eval", "--report", "r.json", "--truth", "t.json"]) == EXIT_ERROR
    (workdir / "labels.csv").write_text("a,x\n")
    assert main(["eval", "--report", "r.json", "--labels", "labels.csv"]) == EXIT_ERROR
    assert main(["eval", "--report", "r.json"]) == EXIT_ERROR


def test_export_dot(workdir, capsys):
    _synth("--digits", "1", "--normal-clusters", "3")
    assert main(["detect", "-i", "g.csv", "-o", "r.json", "--k", "1"]) == EXIT_OK
    assert main(["export", "-i", "g.csv", "--report", "r.json", "-o", "s.dot"]) == EXIT_OK
    dot = (workdir / "s.dot").read_text()
    assert dot.startswith("digraph antibenford {")
    node_lines = [l for l in dot.splitlines() if "score=" in l]
    edge_lines = [l for l in dot.splitlines() if "->" in l]
    assert len(node_lines) == 80
    assert len(edge_lines) == 40 * 40
    assert all("digit=1" in l for l in edge_lines)
    assert main(["export", "-i", "g.csv", "--report", "r.json", "--rank", "9"]) == EXIT_ERROR


def test_stats(workdir, capsys):
    (workdir / "x.csv").write_text("a,b,100\nb,c,25\nc,c,3\nc,a,0.5\n")
    capsys.readouterr()
    assert main(["stats", "-i", "x.csv"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["nodes"] == 3 and out["transactions"] == 2
    assert out["dropped_self_loops"] == 1 and out["dropped_below_min"] == 1
