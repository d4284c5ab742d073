"""Character-level edit distance and recall, and token-level BLEU."""

from __future__ import annotations

import math
from collections import Counter
from typing import List, Sequence

import numpy as np

from ..errors import EmptyLabel, LatexError
from ..latex import significant, tokenize

MAX_ORDER = 4


# above this many DP cells the row update runs vectorized
_VECTOR_CELLS = 4096


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs.

    Works on any two sequences; for strings the units are code points.
    """
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    if len(a) * len(b) > _VECTOR_CELLS:
        return _edit_distance_rows(a, b)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != cb),
            ))
        prev = cur
    return prev[-1]


def _edit_distance_rows(a: Sequence, b: Sequence) -> int:
    # Same row recurrence. The insertion term cur[j-1] + 1 is resolved with a
    # running minimum: cur[j] = j + min_{k<=j}(t[k] - k).
    codes = {}
    ia = np.array([codes.setdefault(x, len(codes)) for x in a], dtype=np.int64)
    ib = np.array([codes.setdefault(x, len(codes)) for x in b], dtype=np.int64)
    col = np.arange(len(ib) + 1, dtype=np.int64)
    prev = col.copy()
    t = np.empty_like(prev)
    for i, ca in enumerate(ia, start=1):
        t[0] = i
        np.minimum(prev[1:] + 1, prev[:-1] + (ib != ca), out=t[1:])
        prev = np.minimum.accumulate(t - col) + col
    return int(prev[-1])


def char_recall(prediction: str, label: str) -> float:
    """``1 - edit_distance / len(label)``. Not clamped, so a prediction much
    longer than its label scores below zero."""
    if not label:
        raise EmptyLabel("character recall is undefined for an empty label")
    return 1.0 - edit_distance(prediction, label) / len(label)


def bleu_tokens(text: str) -> List[str]:
    """Lexer token keys; falls back to non-space characters when the text
    does not tokenize."""
    try:
        return [t.key for t in significant(tokenize(text))]
    except LatexError:
        return [ch for ch in text if not ch.isspace()]


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_from_tokens(candidate: Sequence[str], reference: Sequence[str],
                     max_order: int = MAX_ORDER) -> float:
    """BLEU of one candidate token list against one reference.

    Orders longer than the candidate are left out of the geometric mean
    (effective order), so one-token outputs are not propped up by empty
    higher-order precisions.
    """
    if not candidate:
        return 1.0 if not reference else 0.0
    orders = min(max_order, len(candidate))
    log_sum = 0.0
    for n in range(1, orders + 1):
        cand = _ngrams(candidate, n)
        ref = _ngrams(reference, n)
        total = len(candidate) - n + 1
        matches = sum(min(c, ref[g]) for g, c in cand.items())
        if matches:
            log_sum += math.log(matches / total)
        else:
            # add-one smoothing only where an order has no matches
            log_sum -= math.log(total + 1)
    c, r = len(candidate), len(reference)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum / orders)


def bleu(prediction: str, label: str) -> float:
    """Sentence BLEU over lexer tokens, orders 1-4, with brevity penalty."""
    return bleu_from_tokens(bleu_tokens(prediction), bleu_tokens(label))
