"""End-to-end tests for the command-line interface.

Everything runs in-process through `main(argv)`; only the external-oracle
test spawns a child (that is the feature under test).
"""

import sys

import pytest

from pdfax import Pdfa, from_identifier
from pdfax.cli import main


def run_cli(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# A server that completes the alphabet handshake and then exits, so the
# first real query hits a dead pipe mid-extraction.
DYING_SERVER = """\
import json, sys
req = json.loads(sys.stdin.readline())
sys.stdout.write(json.dumps({"id": req["id"], "alphabet": ["a", "b"]}) + "\\n")
sys.stdout.flush()
"""


# ------------------------------------------------------------------ extract

def test_extract_writes_model_report_and_dot(tmp_path, capsys):
    out = str(tmp_path / "m.pdfa")
    dot = str(tmp_path / "m.dot")
    code, stdout, _ = run_cli(
        ["extract", "--target", "grammar://uhl/2", "--out", out,
         "--dot", dot], capsys)
    assert code == 0
    assert "stop: accepted" in stdout
    model = Pdfa.load(out)
    assert model.n_states == 5
    report_text = (tmp_path / "m.pdfa.report").read_text()
    assert report_text == stdout
    assert (tmp_path / "m.dot").read_text().startswith("digraph pdfa {")


def test_extract_limit_stop_still_exits_zero(tmp_path, capsys):
    out = str(tmp_path / "m.pdfa")
    code, stdout, _ = run_cli(
        ["extract", "--target", "grammar://tomita/1", "--out", out,
         "--max-p", "1"], capsys)
    assert code == 0
    assert "stop: row-cap" in stdout
    Pdfa.load(out)  # artifact is still a valid model


def test_extract_is_reproducible_for_a_seed(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = str(tmp_path / (name + ".pdfa"))
        dot = str(tmp_path / (name + ".dot"))
        code, _, _ = run_cli(
            ["extract", "--target", "grammar://tomita/2", "--out", out,
             "--dot", dot, "--seed", "7"], capsys)
        assert code == 0
        outs.append((out, dot))
    assert open(outs[0][0], "rb").read() == open(outs[1][0], "rb").read()
    assert open(outs[0][1], "rb").read() == open(outs[1][1], "rb").read()


def test_extract_unknown_grammar_exits_2(tmp_path, capsys):
    code, _, err = run_cli(
        ["extract", "--target", "grammar://nope/1",
         "--out", str(tmp_path / "m.pdfa")], capsys)
    assert code == 2
    assert "error:" in err


def test_extract_missing_file_exits_2(tmp_path, capsys):
    code, _, err = run_cli(
        ["extract", "--target", str(tmp_path / "absent.pdfa"),
         "--out", str(tmp_path / "m.pdfa")], capsys)
    assert code == 2
    assert "cannot read" in err


def test_extract_corrupt_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.pdfa"
    bad.write_text("{not json")
    code, _, err = run_cli(
        ["extract", "--target", "file:" + str(bad),
         "--out", str(tmp_path / "m.pdfa")], capsys)
    assert code == 2
    assert "bad PDFA file" in err


def test_extract_dying_oracle_exits_3(tmp_path, capsys):
    server = tmp_path / "server.py"
    server.write_text(DYING_SERVER)
    out = str(tmp_path / "m.pdfa")
    code, stdout, _ = run_cli(
        ["extract", "--target",
         "external:%s %s" % (sys.executable, server),
         "--out", out], capsys)
    assert code == 3
    assert "stop: error" in stdout
    Pdfa.load(out)  # the fallback model is still written


# ------------------------------------------------------------------- sample

def test_sample_writes_requested_count(tmp_path, capsys):
    out = tmp_path / "s.txt"
    code, _, _ = run_cli(
        ["sample", "--target", "grammar://tomita/4", "-n", "50",
         "--max-len", "20", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 50
    tokens = {t for line in lines for t in line.split()}
    assert tokens <= {"0", "1"}


def test_sample_zero_count_writes_empty_file(tmp_path, capsys):
    out = tmp_path / "s.txt"
    code, _, _ = run_cli(
        ["sample", "--target", "grammar://tomita/4", "-n", "0",
         "--out", str(out)], capsys)
    assert code == 0
    assert out.read_text() == ""


def test_sample_depends_only_on_the_seed(tmp_path, capsys):
    texts = {}
    for name, seed in (("a", "5"), ("b", "5"), ("c", "6")):
        out = tmp_path / (name + ".txt")
        run_cli(["sample", "--target", "grammar://uhl/1", "-n", "40",
                 "--seed", seed, "--out", str(out)], capsys)
        texts[name] = out.read_text()
    assert texts["a"] == texts["b"]
    assert texts["a"] != texts["c"]


# --------------------------------------------------------------- export-dot

def test_export_dot_writes_nodes_and_edges(tmp_path, capsys):
    code, stdout, _ = run_cli(
        ["export-dot", "--target", "grammar://tomita/1"], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert sum(1 for l in lines if "$=" in l) == 2      # one node per state
    assert sum(1 for l in lines if "->" in l) == 4      # state x token edges

    out = tmp_path / "g.dot"
    code, _, _ = run_cli(
        ["export-dot", "--target", "grammar://tomita/1",
         "--out", str(out)], capsys)
    assert code == 0
    assert out.read_text() == stdout


def test_export_dot_rejects_non_pdfa_target(tmp_path, capsys):
    corpus = tmp_path / "c.txt"
    corpus.write_text("0 1\n1\n")
    code, _, err = run_cli(
        ["export-dot", "--target", "ngram:2:" + str(corpus)], capsys)
    assert code == 2
    assert "not a PDFA" in err


# ----------------------------------------------------------------- evaluate

def test_evaluate_scores_self_comparison_exactly(tmp_path, capsys):
    saved = tmp_path / "t1.pdfa"
    from_identifier("grammar://tomita/1").save(str(saved))
    code, stdout, _ = run_cli(
        ["evaluate", "grammar://tomita/1", str(saved),
         "--target", "grammar://tomita/1", "--samples", "200"], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert len(lines) == 3
    header = lines[0].split()
    assert header == ["model", "wer", "ndcg_2", "size", "seconds"]
    for line in lines[1:]:
        cells = line.split()
        assert cells[1] == "0.000000"
        assert cells[2] == "1.000000"
        assert cells[3] == "2"


def test_evaluate_wer_only_and_ndcg_only(capsys):
    code, stdout, _ = run_cli(
        ["evaluate", "grammar://tomita/3", "--target", "grammar://tomita/3",
         "--samples", "100", "--wer"], capsys)
    assert code == 0
    row = stdout.splitlines()[1].split()
    assert row[1] == "0.000000" and row[2] == "-"

    code, stdout, _ = run_cli(
        ["evaluate", "grammar://tomita/3", "--target", "grammar://tomita/3",
         "--samples", "100", "--ndcg", "3"], capsys)
    assert code == 0
    assert "ndcg_3" in stdout.splitlines()[0]
    row = stdout.splitlines()[1].split()
    assert row[1] == "-" and row[2] == "1.000000"


def test_evaluate_mismatched_alphabets_exit_2(capsys):
    code, _, err = run_cli(
        ["evaluate", "grammar://uhl/2", "--target", "grammar://tomita/1",
         "--samples", "50"], capsys)
    assert code == 2
    assert "error:" in err


def test_evaluate_accepts_ngram_models(tmp_path, capsys):
    corpus = tmp_path / "c.txt"
    run_cli(["sample", "--target", "grammar://tomita/4", "-n", "300",
             "--out", str(corpus)], capsys)
    code, stdout, _ = run_cli(
        ["evaluate", "ngram:2:" + str(corpus),
         "--target", "grammar://tomita/4", "--samples", "200"], capsys)
    assert code == 0
    row = stdout.splitlines()[1].split()
    assert row[0].startswith("ngram:2:")
    assert 0.0 <= float(row[1]) <= 1.0
    assert 0.0 <= float(row[2]) <= 1.0


def test_bad_ngram_targets_exit_2(tmp_path, capsys):
    for target in ("ngram:x:" + str(tmp_path / "c.txt"), "ngram:2"):
        code, _, err = run_cli(
            ["evaluate", target, "--target", "grammar://tomita/1"], capsys)
        assert code == 2, target
        assert "error:" in err


# ----------------------------------------------------------- tolerance-hint

def test_tolerance_hint_reports_adequate_setting(capsys):
    code, stdout, _ = run_cli(
        ["tolerance-hint", "0.2:1", "0.1:4"], capsys)
    assert code == 0
    assert "0.1 is adequate" in stdout
    assert "0.2 collapsed" in stdout


def test_tolerance_hint_rejects_malformed_runs(capsys):
    code, _, err = run_cli(["tolerance-hint", "banana"], capsys)
    assert code == 2
    assert "TOLERANCE:STATES" in err
