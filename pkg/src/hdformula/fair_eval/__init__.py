"""Fair evaluation: normalize equivalent LaTeX, then score."""

from .evaluate import (
    EvalMode,
    EvalReport,
    EvalSample,
    MetricScores,
    dumps_fixed,
    evaluate_corpus,
    evaluate_sample,
    load_eval_samples,
    save_eval_samples,
)
from .metrics import bleu, bleu_from_tokens, bleu_tokens, char_recall, edit_distance
from .rules import BUILTIN_RULES, EquivalenceRuleSet, Rule, load_rules, normalize

__all__ = [
    "BUILTIN_RULES",
    "EquivalenceRuleSet",
    "EvalMode",
    "EvalReport",
    "EvalSample",
    "MetricScores",
    "Rule",
    "bleu",
    "bleu_from_tokens",
    "bleu_tokens",
    "char_recall",
    "dumps_fixed",
    "edit_distance",
    "evaluate_corpus",
    "evaluate_sample",
    "load_eval_samples",
    "load_rules",
    "normalize",
    "save_eval_samples",
]
