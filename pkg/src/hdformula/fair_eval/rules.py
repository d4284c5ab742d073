"""Token-level rewrite rules that map render-identical LaTeX to one form.

A rule is a pair of LaTeX fragments. ``#1``..``#9`` in a pattern are
wildcards: each binds the shortest non-empty run of balanced tokens that lets
the rest of the pattern match (longer runs are tried on backtracking).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from ..errors import LatexError, NonTerminatingRule, SchemaError
from ..latex import Token, TokenKind, join_tokens, parse, serialize, significant, tokenize

MAX_ROUNDS = 8

Item = Union[Token, int]

BUILTIN_RULES: Tuple[Tuple[str, str], ...] = (
    (r"\dfrac", r"\frac"),
    (r"\tfrac", r"\frac"),
    (r"\le", r"\leq"),
    (r"\ge", r"\geq"),
    (r"\ne", r"\neq"),
    (r"\to", r"\rightarrow"),
    (r"\left(", "("),
    (r"\right)", ")"),
    (r"\left[", "["),
    (r"\right]", "]"),
    (r"\left\{", r"\{"),
    (r"\right\}", r"\}"),
    (r"\left|", "|"),
    (r"\right|", "|"),
    (r"\,", ""),
    (r"\;", ""),
    (r"\!", ""),
    (r"\:", ""),
    (r"\quad", ""),
    (r"\qquad", ""),
    ("\\ ", ""),
    (r"{\rm #1}", r"\mathrm{#1}"),
    (r"{\bf #1}", r"\mathbf{#1}"),
    (r"{\cal #1}", r"\mathcal{#1}"),
)


def _fragment(text: str) -> Tuple[Item, ...]:
    toks = significant(tokenize(text))
    out: List[Item] = []
    i = 0
    while i < len(toks):
        tok = toks[i]
        nxt = toks[i + 1] if i + 1 < len(toks) else None
        if (
            tok.text == "#"
            and nxt is not None
            and nxt.kind is TokenKind.DIGIT
            and nxt.text != "0"
        ):
            out.append(int(nxt.text))
            i += 2
            continue
        out.append(tok)
        i += 1
    return tuple(out)


def _key(item: Item):
    return item if isinstance(item, int) else item.key


def _fragment_text(items: Sequence[Item]) -> str:
    return " ".join(f"#{x}" if isinstance(x, int) else x.key for x in items)


@dataclass(frozen=True)
class Rule:
    pattern: Tuple[Item, ...]
    replacement: Tuple[Item, ...]

    @classmethod
    def from_text(cls, pattern: str, replacement: str) -> "Rule":
        return cls(_fragment(pattern), _fragment(replacement))

    @cached_property
    def pattern_keys(self):
        return tuple(_key(x) for x in self.pattern)

    @cached_property
    def replacement_keys(self):
        return tuple(_key(x) for x in self.replacement)

    def inverse(self) -> "Rule":
        return Rule(self.replacement, self.pattern)

    def __str__(self):
        return f"{_fragment_text(self.pattern)} -> {_fragment_text(self.replacement)}"


def _unit_ends(toks: Sequence[Token]) -> List[Optional[int]]:
    """``ends[i]``: index just past the balanced unit starting at ``i``.

    A unit is one token, a whole ``{...}`` group or a whole environment.
    Closers and unmatched openers start no unit (``None``).
    """
    ends: List[Optional[int]] = [None] * len(toks)
    stack = []
    for i, tok in enumerate(toks):
        kind = tok.kind
        if kind is TokenKind.OPEN_GROUP or kind is TokenKind.ENV_BEGIN:
            stack.append(i)
        elif kind is TokenKind.CLOSE_GROUP or kind is TokenKind.ENV_END:
            if stack:
                opener = toks[stack[-1]].kind
                want = TokenKind.OPEN_GROUP if kind is TokenKind.CLOSE_GROUP else TokenKind.ENV_BEGIN
                if opener is want:
                    ends[stack.pop()] = i + 1
                    continue
            stack.clear()
        else:
            ends[i] = i + 1
    return ends


def _match(pattern, pi, toks, ti, ends, binding) -> Iterator[Tuple[int, Dict[int, Tuple[int, int]]]]:
    if pi == len(pattern):
        yield ti, binding
        return
    p = pattern[pi]
    n = len(toks)
    if not isinstance(p, int):
        if ti < n and toks[ti].key == p:
            yield from _match(pattern, pi + 1, toks, ti + 1, ends, binding)
        return
    if p in binding:
        a, b = binding[p]
        width = b - a
        if [t.key for t in toks[ti : ti + width]] == [t.key for t in toks[a:b]]:
            yield from _match(pattern, pi + 1, toks, ti + width, ends, binding)
        return
    j = ti
    while j < n and ends[j] is not None:
        j = ends[j]
        yield from _match(pattern, pi + 1, toks, j, ends, {**binding, p: (ti, j)})


def _instantiate(items, toks, binding) -> List[Token]:
    out: List[Token] = []
    for x in items:
        if isinstance(x, int):
            a, b = binding[x]
            out.extend(toks[a:b])
        else:
            out.append(x)
    return out


def _check_termination(rules: Sequence[Rule]) -> None:
    """Reject rules that could make rewriting loop.

    Every accepted rule strictly decreases (token count, multiset of literal
    tokens) lexicographically, where the multiset order extends a precedence
    relation built from the rules themselves and kept acyclic.
    """
    above: Dict[str, set] = {}

    def reaches(src, dst):
        seen, todo = set(), [src]
        while todo:
            cur = todo.pop()
            if cur == dst:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            todo.extend(above.get(cur, ()))
        return False

    for rule in rules:
        if not rule.pattern:
            raise NonTerminatingRule(f"empty pattern in rule {rule}")
        pw = Counter(x for x in rule.pattern if isinstance(x, int))
        rw = Counter(x for x in rule.replacement if isinstance(x, int))
        for w, count in rw.items():
            if count > pw.get(w, 0):
                raise NonTerminatingRule(f"wildcard #{w} unbound or duplicated in rule {rule}")
        p_lit = Counter(x.key for x in rule.pattern if not isinstance(x, int))
        r_lit = Counter(x.key for x in rule.replacement if not isinstance(x, int))
        # wildcards bind at least one token, so count each as one
        p_len = sum(p_lit.values()) + sum(pw.values())
        r_len = sum(r_lit.values()) + sum(rw.values())
        if r_len > p_len:
            raise NonTerminatingRule(f"replacement longer than pattern in rule {rule}")
        if r_len < p_len:
            continue
        removed = p_lit - r_lit
        added = r_lit - p_lit
        if not added:
            if not removed:
                raise NonTerminatingRule(f"rule {rule} only reorders tokens")
            continue
        if not removed:
            raise NonTerminatingRule(f"rule {rule} does not decrease any token")
        for big in removed:
            for small in added:
                if big == small or reaches(small, big):
                    raise NonTerminatingRule(f"rule {rule} closes a rewrite cycle")
                above.setdefault(big, set()).add(small)


class EquivalenceRuleSet:
    """Ordered, immutable rule list. Builtins (if enabled) come first."""

    def __init__(self, rules: Iterable[Rule] = (), builtins_enabled: bool = True):
        self.user_rules: Tuple[Rule, ...] = tuple(rules)
        self.builtins_enabled = bool(builtins_enabled)
        builtin = tuple(Rule.from_text(p, r) for p, r in BUILTIN_RULES) if builtins_enabled else ()
        self.rules: Tuple[Rule, ...] = builtin + self.user_rules
        _check_termination(self.rules)
        self._by_head: Dict[str, List[Rule]] = {}
        self._wild_head: List[Rule] = []
        for rule in self.rules:
            head = rule.pattern[0]
            if isinstance(head, int):
                self._wild_head.append(rule)
            else:
                self._by_head.setdefault(head.key, []).append(rule)

    @classmethod
    def from_pairs(cls, pairs, builtins_enabled: bool = True):
        return cls([Rule.from_text(p, r) for p, r in pairs], builtins_enabled)

    @classmethod
    def empty(cls):
        return cls((), builtins_enabled=False)

    def __len__(self):
        return len(self.rules)

    def _candidates(self, key):
        head = self._by_head.get(key)
        if head is None:
            return self._wild_head
        return head + self._wild_head if self._wild_head else head

    def _first_match(self, toks, ends):
        for i, tok in enumerate(toks):
            for rule in self._candidates(tok.key):
                found = next(_match(rule.pattern_keys, 0, toks, i, ends, {}), None)
                if found is not None:
                    return i, rule, found
        return None

    def rewrite(self, tokens: Sequence[Token]) -> List[Token]:
        """Apply rules leftmost-first until none matches."""
        toks = significant(tokens)
        while True:
            hit = self._first_match(toks, _unit_ends(toks))
            if hit is None:
                return toks
            i, rule, (end, binding) = hit
            toks = toks[:i] + _instantiate(rule.replacement, toks, binding) + toks[end:]

    def one_step_rewrites(self, latex: str, inverse: bool = False) -> List[Tuple[Rule, str]]:
        """Every single-site application of every rule (or its inverse).

        An inverse with an empty left side (re-inserting spacing) is applied
        only at the ends of the formula and after a binary operator, where an
        inserted token cannot become some command's argument.
        """
        toks = significant(tokenize(latex))
        ends = _unit_ends(toks)
        original = join_tokens(toks)
        out, seen = [], set()
        for rule in self.rules:
            src = rule.inverse() if inverse else rule
            keys = src.pattern_keys
            for i in range(len(toks) + 1):
                if keys:
                    found = next(_match(keys, 0, toks, i, ends, {}), None)
                    if found is None:
                        continue
                    end, binding = found
                elif _free_gap(toks, i):
                    end, binding = i, {}
                else:
                    continue
                new = toks[:i] + _instantiate(src.replacement, toks, binding) + toks[end:]
                text = join_tokens(new)
                if text != original and (rule, text) not in seen:
                    seen.add((rule, text))
                    out.append((rule, text))
        return out


_BINARY = frozenset("+-=<>,")
_BINDS = (TokenKind.SUPERSCRIPT, TokenKind.SUBSCRIPT, TokenKind.COMMAND)


def _free_gap(toks, i) -> bool:
    nxt = toks[i] if i < len(toks) else None
    if nxt is not None and nxt.kind in (TokenKind.SUPERSCRIPT, TokenKind.SUBSCRIPT):
        return False
    if i == 0:
        return True
    prev = toks[i - 1]
    if i == len(toks):
        return prev.kind not in _BINDS
    if prev.kind is not TokenKind.OPERATOR or prev.text not in _BINARY:
        return False
    return i < 2 or toks[i - 2].kind not in _BINDS


def normalize(latex: str, rules: EquivalenceRuleSet) -> str:
    """Rewrite to a fixed point, then print canonically.

    Tokenization errors propagate. A rewritten stream that no longer parses
    is printed token by token instead of through the AST.
    """
    current = latex
    for _ in range(MAX_ROUNDS):
        toks = rules.rewrite(tokenize(current))
        try:
            out = serialize(parse(toks))
        except LatexError:
            out = join_tokens(toks)
        if out == current:
            return out
        current = out
    return current


def load_rules(path) -> EquivalenceRuleSet:
    """Read a JSON rule file ``{"rules": [{"pattern", "replacement"}], "builtins": bool}``."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(exc.lineno, "rules", exc.msg) from None
    if not isinstance(data, dict):
        raise SchemaError(1, "rules", "top level must be an object")
    builtins = data.get("builtins", True)
    if not isinstance(builtins, bool):
        raise SchemaError(1, "builtins", "must be a boolean")
    raw = data.get("rules", [])
    if not isinstance(raw, list):
        raise SchemaError(1, "rules", "must be a list")
    rules = []
    for k, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise SchemaError(1, f"rules[{k}]", "must be an object")
        for field in ("pattern", "replacement"):
            if not isinstance(entry.get(field), str):
                raise SchemaError(1, f"rules[{k}].{field}", "must be a string")
        rules.append(Rule.from_text(entry["pattern"], entry["replacement"]))
    return EquivalenceRuleSet(rules, builtins)
