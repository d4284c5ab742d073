import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdformula.errors import EmptyCorpus, EmptyLabel, NonTerminatingRule, SchemaError
from hdformula.fair_eval import (
    EquivalenceRuleSet,
    EvalMode,
    EvalSample,
    Rule,
    bleu,
    bleu_from_tokens,
    bleu_tokens,
    char_recall,
    dumps_fixed,
    edit_distance,
    evaluate_corpus,
    evaluate_sample,
    load_eval_samples,
    load_rules,
    normalize,
    save_eval_samples,
)
from hdformula.latex import parse_latex, serialize
from oracles import bleu_reference, edit_distance_recursive

BUILTINS = EquivalenceRuleSet()
FAIR, NONFAIR = EvalMode.FAIR, EvalMode.NONFAIR


class TestNormalize:
    @pytest.mark.parametrize("src, out", [
        (r"\dfrac{1}{2}", r"\frac{1}{2}"),
        (r"\tfrac12", r"\frac{1}{2}"),
        (r"\left( x \right)", "(x)"),
        (r"\left\{ a \right\}", r"\{a\}"),
        (r"a \le b \ne c", r"a\leq b\neq c"),
        (r"f \to g", r"f\rightarrow g"),
        (r"a\,b\;c\!d\quad e\qquad f\ g", "abcdefg"),
        (r"{\rm d}x", r"\mathrm{d}x"),
        (r"{\rm abc}", r"\mathrm{abc}"),
        (r"\dfrac{\dfrac{a}{b}}{c}", r"\frac{\frac{a}{b}}{c}"),
    ])
    def test_builtins(self, src, out):
        assert normalize(src, BUILTINS) == out

    def test_disabled_builtins_only_canonicalize(self):
        assert normalize(r"\dfrac{1}{2}", EquivalenceRuleSet.empty()) == r"\dfrac{1}{2}"
        assert normalize("a ^ 2", EquivalenceRuleSet.empty()) == "a^{2}"

    def test_user_rule_with_wildcards(self):
        rules = EquivalenceRuleSet.from_pairs([(r"\operatorname{#1}", r"\mathrm{#1}")])
        assert normalize(r"\operatorname{sin} x", rules) == r"\mathrm{sin}x"

    def test_wildcard_binds_balanced_run(self):
        rules = EquivalenceRuleSet.from_pairs([(r"\boxed{#1}", "#1")])
        assert normalize(r"\boxed{a+{b}}", rules) == "a+{b}"

    def test_idempotent(self, small_corpus):
        for rec in small_corpus:
            once = normalize(rec.latex, BUILTINS)
            assert normalize(once, BUILTINS) == once

    def test_unbalanced_input_still_normalizes(self):
        assert normalize(r"\dfrac{1", BUILTINS) == r"\frac{1"


class TestRules:
    @pytest.mark.parametrize("pattern, replacement", [
        ("a", "ab"),
        ("ab", "ba"),
        (r"\foo{#1}", r"\foo{#2}"),
        ("", "x"),
    ])
    def test_rejected(self, pattern, replacement):
        with pytest.raises(NonTerminatingRule):
            EquivalenceRuleSet.from_pairs([(pattern, replacement)], builtins_enabled=False)

    def test_cycle_rejected(self):
        with pytest.raises(NonTerminatingRule):
            EquivalenceRuleSet.from_pairs([(r"\alpha", r"\beta"), (r"\beta", r"\alpha")],
                                          builtins_enabled=False)

    def test_chain_accepted(self):
        rules = EquivalenceRuleSet.from_pairs([(r"\alpha", r"\beta"), (r"\beta", "b")],
                                              builtins_enabled=False)
        assert normalize(r"\alpha", rules) == "b"

    def test_inverse_swaps_sides(self):
        rule = Rule.from_text(r"\dfrac", r"\frac")
        assert rule.inverse().pattern_keys == rule.replacement_keys

    def test_load(self, tmp_path):
        p = tmp_path / "r.json"
        p.write_text(json.dumps({"rules": [{"pattern": r"\mathbb{R}", "replacement": "R"}], "builtins": False}))
        rules = load_rules(p)
        assert normalize(r"x\in\mathbb{R}", rules) == r"x\in R"
        assert normalize(r"\dfrac12", rules) == r"\dfrac{1}{2}"

    @pytest.mark.parametrize("body", [
        "[]", '{"builtins": "yes"}', '{"rules": {}}', '{"rules": [1]}',
        '{"rules": [{"pattern": "a"}]}', "{oops",
    ])
    def test_load_schema_errors(self, tmp_path, body):
        p = tmp_path / "r.json"
        p.write_text(body)
        with pytest.raises(SchemaError):
            load_rules(p)

    def test_load_nonterminating(self, tmp_path):
        p = tmp_path / "r.json"
        p.write_text(json.dumps({"rules": [{"pattern": "x", "replacement": "xx"}]}))
        with pytest.raises(NonTerminatingRule):
            load_rules(p)


class TestEditDistance:
    @pytest.mark.parametrize("a, b, d", [("abc", "abc", 0), ("x^2", "x^3", 1), ("", "ab", 2),
                                         ("kitten", "sitting", 3)])
    def test_examples(self, a, b, d):
        assert edit_distance(a, b) == d

    @settings(max_examples=300, deadline=None)
    @given(st.text(alphabet="ab^\\", max_size=6), st.text(alphabet="ab^\\", max_size=6))
    def test_matches_oracle(self, a, b):
        assert edit_distance(a, b) == edit_distance_recursive(a, b)

    def test_long_strings_match_wagner_fischer(self):
        def reference(a, b):
            prev = list(range(len(b) + 1))
            for i, ca in enumerate(a, 1):
                cur = [i]
                for j, cb in enumerate(b, 1):
                    cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
                prev = cur
            return prev[-1]

        rng = random.Random(3)
        for _ in range(20):
            a = "".join(rng.choice("ab{}") for _ in range(rng.randint(60, 300)))
            b = "".join(rng.choice("ab{}") for _ in range(rng.randint(60, 300)))
            assert edit_distance(a, b) == reference(a, b) == edit_distance(b, a)

    def test_unicode_scalars(self):
        assert edit_distance("αβ", "αγ") == 1


class TestRecallAndBleu:
    def test_recall_examples(self):
        assert char_recall("x^2", "x^2") == 1.0
        assert char_recall("x^3", "x^2") == pytest.approx(1 - 1 / 3, abs=1e-12)
        assert char_recall("aaaaaa", "a") == -4.0

    def test_recall_empty_label(self):
        with pytest.raises(EmptyLabel):
            char_recall("a", "")

    def test_bleu_boundaries(self):
        assert bleu("x^2+1", "x^2+1") == 1.0
        assert bleu("", "a") == 0.0
        assert bleu("", "") == 1.0

    def test_bleu_spec_pair(self):
        got = bleu("a + b", "a + c")
        assert got == pytest.approx(bleu_reference(bleu_tokens("a + b"), bleu_tokens("a + c")), abs=1e-9)
        assert 0 < got < 1

    def test_bleu_is_over_tokens(self):
        assert bleu_tokens(r"\alpha+b") == ["\\alpha", "+", "b"]

    def test_bleu_random_lists_match_reference(self):
        rng = random.Random(5)
        for _ in range(500):
            cand = [rng.choice("abcde") for _ in range(rng.randint(0, 9))]
            ref = [rng.choice("abcde") for _ in range(rng.randint(1, 9))]
            got = bleu_from_tokens(cand, ref)
            assert got == pytest.approx(bleu_reference(cand, ref), abs=1e-9)
            assert 0.0 <= got <= 1.0

    def test_bleu_malformed_falls_back(self):
        assert 0.0 <= bleu("\\", "a") <= 1.0


class TestEvaluateSample:
    def test_dfrac_example(self):
        sample = EvalSample("s", r"\frac{1}{2}", (r"\dfrac{1}{2}",))
        nf = evaluate_sample(sample, BUILTINS, NONFAIR)
        fair = evaluate_sample(sample, BUILTINS, FAIR)
        assert len(r"\dfrac{1}{2}") == 12
        assert nf.aed == 1 and nf.cr == pytest.approx(1 - 1 / 12, abs=1e-12)
        assert (fair.aed, fair.cr, fair.bleu) == (0, 1.0, 1.0)

    def test_best_over_labels(self):
        sample = EvalSample("s", "x+y", ("q", "x+y"))
        scores = evaluate_sample(sample, BUILTINS, NONFAIR)
        assert scores.aed == 0 and scores.best_label == {"cr": 1, "aed": 1, "bleu": 1}

    def test_ties_keep_first_label(self):
        scores = evaluate_sample(EvalSample("s", "a", ("a", "a")), BUILTINS, FAIR)
        assert set(scores.best_label.values()) == {0}

    def test_empty_rules_match_nonfair_on_canonical_strings(self, small_corpus):
        empty = EquivalenceRuleSet.empty()
        for rec in small_corpus:
            canon = serialize(parse_latex(rec.latex))
            pred = canon[:-1] if len(canon) > 1 else canon
            if parse_attempt(pred) != pred:
                continue
            sample = EvalSample(rec.id, pred, (canon,))
            assert evaluate_sample(sample, empty, FAIR) == evaluate_sample(sample, empty, NONFAIR)

    def test_fallback_flag(self):
        scores = evaluate_sample(EvalSample("s", "a\\", ("a",)), BUILTINS, FAIR)
        assert scores.fallback and scores.aed == 1
        assert not evaluate_sample(EvalSample("s", "a", ("a",)), BUILTINS, FAIR).fallback

    def test_labels_required(self):
        with pytest.raises(ValueError):
            EvalSample("s", "a", ())


def parse_attempt(text):
    """Canonical form of ``text``, or None if it does not parse."""
    try:
        return serialize(parse_latex(text))
    except Exception:
        return None


class TestEvaluateCorpus:
    def test_identical(self):
        report = evaluate_corpus([EvalSample("a", "x^2", ("x^2",))], BUILTINS)
        for mode in ("fair", "nonfair"):
            assert report.aggregate[mode] == {"cr": 1.0, "aed": 0.0, "bleu": 1.0}

    def test_mean_cr(self):
        samples = [EvalSample("a", "ab", ("ab",)), EvalSample("b", "a", ("ab",))]
        assert evaluate_corpus(samples, BUILTINS).aggregate["nonfair"]["cr"] == 0.75

    def test_order_independent(self, small_corpus):
        rng = random.Random(2)
        samples = [EvalSample(r.id, r.latex[: rng.randint(0, len(r.latex))], r.labels) for r in small_corpus]
        shuffled = samples[:]
        rng.shuffle(shuffled)
        assert evaluate_corpus(samples, BUILTINS).aggregate == evaluate_corpus(shuffled, BUILTINS).aggregate

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            evaluate_corpus([], BUILTINS)

    def test_single_mode(self):
        report = evaluate_corpus([EvalSample("a", "x", ("x",))], BUILTINS, modes=(FAIR,))
        assert list(report.aggregate) == ["fair"] and "nonfair" not in report.per_sample[0]

    def test_json_six_decimals(self):
        report = evaluate_corpus([EvalSample("a", "x^3", ("x^2",))], BUILTINS)
        text = report.to_json()
        assert '"cr": 0.666667' in text and '"aed": 1' in text
        data = json.loads(text)
        assert data["aggregate"]["fair"]["aed"] == 1.0
        assert data["per_sample"][0]["id"] == "a"

    def test_dumps_fixed(self):
        assert dumps_fixed({"x": 0.1, "y": [1, 2.5]}, 3) == '{\n  "x": 0.100,\n  "y": [\n    1,\n    2.500\n  ]\n}'


class TestSampleIO:
    def test_round_trip(self, tmp_path):
        samples = [EvalSample("a", "x", ("x", "y")), EvalSample("b", "α", ("β",))]
        save_eval_samples(samples, tmp_path / "s.jsonl")
        assert load_eval_samples(tmp_path / "s.jsonl") == (samples, [])

    def test_strict_and_lenient(self, tmp_path):
        p = tmp_path / "s.jsonl"
        p.write_text('{"id": "a", "prediction": "x", "labels": ["x"]}\n{"id": "b", "prediction": "x"}\n')
        with pytest.raises(SchemaError) as info:
            load_eval_samples(p)
        assert info.value.line == 2
        samples, problems = load_eval_samples(p, lenient=True)
        assert [s.id for s in samples] == ["a"] and problems[0].field == "labels"
