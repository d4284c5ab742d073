"""JSONL corpus records: loading with line-addressed diagnostics, saving."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

from ..errors import HDFormulaError, SchemaError
from ..latex import parse_latex

logger = logging.getLogger(__name__)

DOMAINS = ("math", "stat", "phy", "q-fin", "q-bio", "econ", "eess", "cs")
DISPLAY_MODES = ("inline", "display")


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    domain: str
    latex: str
    labels: Tuple[str, ...]
    display_mode: str = "display"

    def to_json(self) -> str:
        obj = {
            "id": self.id,
            "domain": self.domain,
            "latex": self.latex,
            "labels": list(self.labels),
            "display_mode": self.display_mode,
        }
        return json.dumps(obj, ensure_ascii=False)


def record_from_obj(obj, line: int = 0) -> CorpusRecord:
    """Validate a decoded JSON object; raise :class:`SchemaError` on the
    first problem."""
    if not isinstance(obj, dict):
        raise SchemaError(line, "<record>", "expected a JSON object")
    for key in ("id", "domain", "latex", "labels", "display_mode"):
        if key not in obj:
            raise SchemaError(line, key, "missing")
    rid, domain, latex, labels, mode = (
        obj["id"], obj["domain"], obj["latex"], obj["labels"], obj["display_mode"],
    )
    if not isinstance(rid, str) or not rid:
        raise SchemaError(line, "id", "must be a non-empty string")
    if domain not in DOMAINS:
        raise SchemaError(line, "domain", f"unknown domain {domain!r}")
    if not isinstance(latex, str):
        raise SchemaError(line, "latex", "must be a string")
    if not isinstance(labels, list) or not labels or not all(isinstance(x, str) for x in labels):
        raise SchemaError(line, "labels", "must be a non-empty list of strings")
    if mode not in DISPLAY_MODES:
        raise SchemaError(line, "display_mode", f"must be one of {DISPLAY_MODES}")
    for field_name, text in [("latex", latex)] + [("labels", x) for x in labels]:
        try:
            parse_latex(text)
        except HDFormulaError as exc:
            raise SchemaError(line, field_name, f"does not parse: {exc}") from None
    return CorpusRecord(rid, domain, latex, tuple(labels), mode)


def load_corpus(path) -> Tuple[List[CorpusRecord], List[SchemaError]]:
    """Read a JSONL corpus.

    Returns ``(records, diagnostics)``; a malformed line becomes a
    :class:`SchemaError` in ``diagnostics`` and the remaining lines still
    load. Blank lines are skipped. Raises ``OSError`` if the file cannot be
    read.
    """
    records: List[CorpusRecord] = []
    diagnostics: List[SchemaError] = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                diagnostics.append(SchemaError(lineno, "<json>", str(exc)))
                continue
            try:
                rec = record_from_obj(obj, lineno)
            except SchemaError as exc:
                diagnostics.append(exc)
                continue
            if rec.id in seen:
                diagnostics.append(SchemaError(lineno, "id", f"duplicate id {rec.id!r}"))
                continue
            seen.add(rec.id)
            records.append(rec)
    for diag in diagnostics:
        logger.debug("corpus %s: %s", path, diag)
    return records, diagnostics


def save_corpus(records, path) -> None:
    Path(path).write_text("".join(r.to_json() + "\n" for r in records), encoding="utf-8")
