"""Per-sample and corpus evaluation in fair and non-fair modes."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from ..errors import EmptyCorpus, LatexError, SchemaError
from .metrics import bleu, edit_distance
from .rules import EquivalenceRuleSet, normalize

METRICS = ("cr", "aed", "bleu")


class EvalMode(enum.Enum):
    FAIR = "fair"
    NONFAIR = "nonfair"


@dataclass(frozen=True)
class EvalSample:
    id: str
    prediction: str
    labels: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise ValueError(f"sample {self.id!r} has no labels")


@dataclass(frozen=True)
class MetricScores:
    cr: float
    aed: int
    bleu: float
    # index of the label that produced each best value
    best_label: Dict[str, int] = field(default_factory=dict, compare=False)
    fallback: bool = False

    def to_dict(self):
        return {
            "cr": self.cr,
            "aed": self.aed,
            "bleu": self.bleu,
            "best_label_index": dict(self.best_label),
            "fallback": self.fallback,
        }


def _recall(distance: int, label: str) -> float:
    # an empty label can appear after normalization (e.g. "\," alone)
    return 1.0 - distance / max(1, len(label))


def _prepare(text: str, rules: EquivalenceRuleSet, mode: EvalMode):
    if mode is EvalMode.NONFAIR:
        return text, False
    try:
        return normalize(text, rules), False
    except LatexError:
        return text, True


def evaluate_sample(sample: EvalSample, rules: EquivalenceRuleSet,
                    mode: EvalMode = EvalMode.FAIR) -> MetricScores:
    """Score one prediction against all of its labels; keep the best per metric.

    In fair mode every string is normalized first. A string that fails to
    tokenize is scored raw and the result is flagged with ``fallback``.
    """
    pred, flagged = _prepare(sample.prediction, rules, mode)
    best_cr = best_bleu = -math.inf
    best_ed = None
    idx = {}
    for k, raw in enumerate(sample.labels):
        label, bad = _prepare(raw, rules, mode)
        flagged = flagged or bad
        ed = edit_distance(pred, label)
        cr = _recall(ed, label)
        bs = bleu(pred, label)
        if cr > best_cr:
            best_cr, idx["cr"] = cr, k
        if best_ed is None or ed < best_ed:
            best_ed, idx["aed"] = ed, k
        if bs > best_bleu:
            best_bleu, idx["bleu"] = bs, k
    return MetricScores(best_cr, best_ed, best_bleu, idx, flagged)


@dataclass
class EvalReport:
    per_sample: List[dict]
    aggregate: Dict[str, Dict[str, float]]
    modes: Tuple[EvalMode, ...]

    def to_dict(self):
        return {"per_sample": self.per_sample, "aggregate": self.aggregate}

    def to_json(self, places: int = 6) -> str:
        return dumps_fixed(self.to_dict(), places)


def dumps_fixed(obj, places: int = 6) -> str:
    """``json.dumps`` with every float written with exactly ``places`` decimals."""
    marks = {}

    def swap(o):
        if isinstance(o, float):
            tag = f"@@F{len(marks)}@@"
            marks[tag] = f"{o:.{places}f}"
            return tag
        if isinstance(o, dict):
            return {k: swap(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [swap(v) for v in o]
        return o

    text = json.dumps(swap(obj), indent=2, ensure_ascii=False)
    for tag, num in marks.items():
        text = text.replace(f'"{tag}"', num, 1)
    return text


def evaluate_corpus(samples: Sequence[EvalSample], rules: EquivalenceRuleSet,
                    modes: Sequence[EvalMode] = (EvalMode.NONFAIR, EvalMode.FAIR)) -> EvalReport:
    if not samples:
        raise EmptyCorpus("no samples to evaluate")
    modes = tuple(modes)
    rows = []
    sums: Dict[EvalMode, Dict[str, List[float]]] = {m: {k: [] for k in METRICS} for m in modes}
    for sample in samples:
        row = {"id": sample.id}
        for mode in modes:
            scores = evaluate_sample(sample, rules, mode)
            row[mode.value] = scores.to_dict()
            for k in METRICS:
                sums[mode][k].append(getattr(scores, k))
        rows.append(row)
    # fsum is correctly rounded, so the means do not depend on sample order
    aggregate = {
        m.value: {k: math.fsum(v) / len(v) for k, v in sums[m].items()} for m in modes
    }
    return EvalReport(rows, aggregate, modes)


def sample_from_obj(obj, line: int) -> EvalSample:
    if not isinstance(obj, dict):
        raise SchemaError(line, "<record>", "expected a JSON object")
    if not isinstance(obj.get("id"), str):
        raise SchemaError(line, "id", "must be a string")
    if not isinstance(obj.get("prediction"), str):
        raise SchemaError(line, "prediction", "must be a string")
    labels = obj.get("labels")
    if not isinstance(labels, list) or not labels or not all(isinstance(x, str) for x in labels):
        raise SchemaError(line, "labels", "must be a non-empty list of strings")
    return EvalSample(obj["id"], obj["prediction"], tuple(labels))


def load_eval_samples(path, lenient: bool = False):
    """Read JSONL samples. Returns ``(samples, diagnostics)``; bad lines raise
    :class:`SchemaError` unless ``lenient``."""
    samples, problems = [], []
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise SchemaError(no, "<json>", exc.msg) from None
                samples.append(sample_from_obj(obj, no))
            except SchemaError as exc:
                if not lenient:
                    raise
                problems.append(exc)
    return samples, problems


def save_eval_samples(samples: Sequence[EvalSample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps({"id": s.id, "prediction": s.prediction, "labels": list(s.labels)},
                                ensure_ascii=False) + "\n")
