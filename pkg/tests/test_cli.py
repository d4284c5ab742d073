import json

import pytest

from hdformula.cli import DEFAULT_SEED, main
from hdformula.corpus import CorpusRecord, load_corpus, save_corpus
from hdformula.latex import parse_latex


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def corpus_file(tmp_path, small_corpus):
    path = tmp_path / "corpus.jsonl"
    save_corpus(small_corpus[:12], path)
    return path


class TestParse:
    def test_expr(self, capsys):
        code, out, _ = run(capsys, "parse", "--expr", "a^2+b^2")
        assert code == 0 and out.splitlines()[0] == "level=1 chars=5 lines=1"

    def test_json(self, capsys):
        code, out, _ = run(capsys, "parse", "--expr", r"\begin{matrix}a&b\\c&d\end{matrix}", "--json")
        data = json.loads(out)
        assert code == 0 and (data["level"], data["char_count"], data["line_count"]) == (2, 5, 2)
        assert data["ast"]["type"] == "Sequence"

    def test_unbalanced(self, capsys):
        code, _, err = run(capsys, "parse", "--expr", "{a")
        assert code == 2 and "UnbalancedBraces" in err and "0" in err

    def test_empty(self, capsys):
        code, out, _ = run(capsys, "parse", "--expr", "", "--json")
        data = json.loads(out)
        assert code == 0 and data["level"] == 0 and data["ast"] == {"type": "Sequence"}

    def test_input_file(self, capsys, tmp_path):
        (tmp_path / "f.tex").write_text(r"\frac{1}{2}" + "\n")
        code, out, _ = run(capsys, "parse", "--input", tmp_path / "f.tex")
        assert code == 0 and out.startswith("level=1 chars=3 lines=1")

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "parse", "--input", tmp_path / "nope.tex")
        assert code == 3


class TestStats:
    def test_three_records(self, capsys, tmp_path):
        recs = [CorpusRecord(f"r{k}", d, t, (t,)) for k, (d, t) in
                enumerate([("math", "a+b"), ("cs", r"\frac{x}{y^{2}}"), ("phy", r"x=1\\y=2\\z=3\\w=4")])]
        save_corpus(recs, tmp_path / "c.jsonl")
        code, out, _ = run(capsys, "stats", "--corpus", tmp_path / "c.jsonl")
        rows = [line.split(",") for line in out.splitlines()[1:]]
        nonzero = {tuple(r[:3]) for r in rows if r[3] != "0"}
        assert code == 0 and nonzero == {("[1-2]", "A", "math"), ("[1-2]", "A", "cs"), ("[1-2]", "B", "phy")}

    def test_empty_corpus(self, capsys, tmp_path):
        (tmp_path / "e.jsonl").write_text("")
        assert run(capsys, "stats", "--corpus", tmp_path / "e.jsonl")[0] == 3

    def test_lenient(self, capsys, caplog, tmp_path, corpus_file):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(corpus_file.read_text() + '{"id": "x"}\n')
        assert run(capsys, "stats", "--corpus", bad)[0] == 3
        code, out, _ = run(capsys, "stats", "--corpus", bad, "--lenient")
        assert code == 0 and any(r.levelname == "WARNING" and "missing" in r.getMessage() for r in caplog.records)
        assert sum(int(r.split(",")[3]) for r in out.splitlines()[1:]) == 12

    def test_csv_and_figure(self, capsys, tmp_path, corpus_file):
        code, _, _ = run(capsys, "stats", "--corpus", corpus_file, "--csv", tmp_path / "t.csv",
                         "--figure", tmp_path / "t.png")
        assert code == 0
        assert (tmp_path / "t.csv").read_text().startswith("level_group,line_bin,domain,count")
        assert (tmp_path / "t.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestDecompose:
    def test_no_crop_single_entry(self, capsys, corpus_file):
        code, out, _ = run(capsys, "decompose", "--corpus", corpus_file, "--mode", "no-crop")
        lines = [json.loads(x) for x in out.splitlines()]
        assert code == 0 and len(lines) == 12
        assert all(len(m["entries"]) == 1 for m in lines)

    def test_defaults_and_reproducibility(self, capsys, corpus_file):
        code, first, err = run(capsys, "decompose", "--corpus", corpus_file,
                               "--mode", "full-subformula-crop")
        assert code == 0 and f"# seed={DEFAULT_SEED}" in err
        for m in map(json.loads, first.splitlines()):
            assert len(m["entries"]) - 1 <= 4
            assert isinstance(m["coverage_fallback"], bool)
        _, second, _ = run(capsys, "decompose", "--corpus", corpus_file, "--mode", "full-subformula-crop")
        assert first == second
        _, other, _ = run(capsys, "decompose", "--corpus", corpus_file, "--seed", "1")
        assert other != first

    def test_sorted_by_id(self, capsys, tmp_path, small_corpus):
        save_corpus(list(reversed(small_corpus[:5])), tmp_path / "r.jsonl")
        _, out, _ = run(capsys, "decompose", "--corpus", tmp_path / "r.jsonl")
        ids = [json.loads(x)["instance_id"] for x in out.splitlines()]
        assert ids == sorted(ids)


@pytest.fixture
def pred_file(tmp_path):
    path = tmp_path / "pred.jsonl"
    rows = [
        {"id": "same", "prediction": "x^2", "labels": ["x^2"]},
        {"id": "frac", "prediction": r"\frac{1}{2}", "labels": [r"\dfrac{1}{2}"]},
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


class TestEval:
    def test_both(self, capsys, pred_file):
        code, out, err = run(capsys, "eval", "--pred", pred_file)
        report = json.loads(out)
        assert code == 0 and set(report["aggregate"]) == {"fair", "nonfair"}
        same, frac = report["per_sample"]
        assert same["fair"]["cr"] == same["nonfair"]["cr"] == 1.0
        assert frac["fair"]["cr"] == 1.0 and frac["nonfair"]["cr"] < 1.0
        assert "fair: CR=" in err

    def test_single_mode(self, capsys, pred_file):
        _, out, _ = run(capsys, "eval", "--pred", pred_file, "--nonfair")
        assert list(json.loads(out)["aggregate"]) == ["nonfair"]

    def test_report_and_figure(self, capsys, tmp_path, pred_file):
        code, _, _ = run(capsys, "eval", "--pred", pred_file, "--report", tmp_path / "r.json",
                         "--figure", tmp_path / "r.png")
        assert code == 0
        assert '"cr": 1.000000' in (tmp_path / "r.json").read_text()
        assert (tmp_path / "r.png").stat().st_size > 0

    def test_bad_rules(self, capsys, tmp_path, pred_file):
        (tmp_path / "r.json").write_text(json.dumps({"rules": [{"pattern": "a", "replacement": "aa"}]}))
        assert run(capsys, "eval", "--pred", pred_file, "--rules", tmp_path / "r.json")[0] == 3

    def test_schema_error(self, capsys, tmp_path):
        (tmp_path / "p.jsonl").write_text('{"id": "a"}\n')
        assert run(capsys, "eval", "--pred", tmp_path / "p.jsonl")[0] == 3


class TestSynth:
    def test_level_two(self, capsys):
        code, out, _ = run(capsys, "synth", "--count", 100, "--level", 2)
        records = [json.loads(x) for x in out.splitlines()]
        assert code == 0 and len(records) == 100
        assert all(parse_latex(r["latex"]).level == 2 for r in records)

    def test_infeasible(self, capsys):
        assert run(capsys, "synth", "--count", 1, "--level", 0, "--lines", 3)[0] == 4

    def test_reproducible_file(self, capsys, tmp_path):
        run(capsys, "synth", "--count", 20, "--level", 3, "--lines", 2, "--seed", 9, "--out", tmp_path / "a.jsonl")
        run(capsys, "synth", "--count", 20, "--level", 3, "--lines", 2, "--seed", 9, "--out", tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        records, diags = load_corpus(tmp_path / "a.jsonl")
        assert diags == [] and all(parse_latex(r.latex).line_count == 2 for r in records)


class TestToyTrain:
    def test_all_modes_and_figure(self, capsys, tmp_path, corpus_file):
        code, out, err = run(capsys, "toy-train", "--corpus", corpus_file, "--mode", "all", "--epochs", 2,
                             "--dim", 6, "--figure", tmp_path / "c.png")
        rows = out.splitlines()
        assert code == 0 and rows[0] == "epoch,mode,mean_total_loss,mean_main_loss,mean_sub_loss"
        assert {r.split(",")[1] for r in rows[1:]} == {
            "no-crop", "full-random-crop", "full-subformula-crop", "hybrid"}
        assert len(rows) == 1 + 4 * 2
        assert "final-loss ordering" in err
        assert (tmp_path / "c.png").stat().st_size > 0

    def test_identical_seeds_identical_csv(self, capsys, tmp_path, corpus_file):
        for name in ("a.csv", "b.csv"):
            run(capsys, "toy-train", "--corpus", corpus_file, "--epochs", 2, "--dim", 6,
                "--seed", 3, "--curve", tmp_path / name)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_checkpoint(self, capsys, tmp_path, corpus_file):
        code, _, _ = run(capsys, "toy-train", "--corpus", corpus_file, "--epochs", 1, "--dim", 4,
                         "--mode", "no-crop", "--checkpoint", tmp_path / "p.bin")
        assert code == 0 and (tmp_path / "p.bin.json").exists()

    def test_non_finite(self, capsys, corpus_file):
        code, _, err = run(capsys, "toy-train", "--corpus", corpus_file, "--epochs", 3, "--dim", 4,
                           "--lr", "1e308")
        assert code == 5 and "NonFiniteLoss" in err
