"""Random formula synthesis with an exact target level and line count.

Formulas are assembled from text fragments whose hierarchical level is
tracked constructively, then checked by parsing. Surface syntax is varied on
purpose (optional braces, stray spaces, ``\\left(`` pairs, alias commands)
so that the output exercises the parser and the normalizer, not just the
canonical serializer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List

from ..errors import InfeasibleSpec
from ..latex import parse_latex
from .records import DOMAINS, CorpusRecord

MAX_LEVEL = 7

LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
DIGITS = "0123456789"
GREEK = ("\\alpha", "\\beta", "\\gamma", "\\theta", "\\lambda", "\\mu", "\\pi", "\\sigma", "\\omega", "\\infty")
CHAR_OPS = ("+", "-", "=", "<", ">", ",")
WORD_OPS = ("\\cdot", "\\times", "\\leq", "\\geq", "\\neq", "\\rightarrow", "\\pm", "\\le", "\\ne", "\\to")
ACCENTS = ("\\hat", "\\bar", "\\tilde", "\\vec", "\\mathrm", "\\mathbf", "\\overline")
ENVS = ("matrix", "pmatrix", "bmatrix", "vmatrix", "cases")
FRACS = ("\\frac", "\\frac", "\\frac", "\\dfrac", "\\tfrac")


@dataclass(frozen=True)
class SynthSpec:
    target_level: int
    target_lines: int = 1
    max_chars: int = 400
    rng_seed: int = 0


@dataclass(frozen=True)
class _Frag:
    text: str
    level: int

    @property
    def single_char(self) -> bool:
        return len(self.text) == 1 and self.text.isalnum()


class _Generator:
    def __init__(self, rng: random.Random, size: int):
        self.rng = rng
        self.size = size

    # -- leaves -----------------------------------------------------------
    def atom(self) -> _Frag:
        r = self.rng.random()
        if r < 0.6:
            return _Frag(self.rng.choice(LETTERS), 0)
        if r < 0.85:
            return _Frag(self.rng.choice(DIGITS), 0)
        return _Frag(self.rng.choice(GREEK) + " ", 0)

    def braced(self, frag: _Frag, after_command: bool = False) -> str:
        if frag.single_char and self.rng.random() < 0.5:
            # \frac a b, never \fracab
            return " " + frag.text if after_command and frag.text.isalpha() else frag.text
        return "{" + frag.text + "}"

    def op(self, before_brace: bool) -> str:
        if not before_brace and self.rng.random() < 0.3:
            text = " " + self.rng.choice(WORD_OPS) + " "
        else:
            text = self.rng.choice(CHAR_OPS)
            if self.rng.random() < 0.15:
                text = " " + text + " "
        if self.rng.random() < 0.05:
            text += "\\, "
        return text

    def join(self, frags) -> str:
        out = frags[0].text
        for frag in frags[1:]:
            starts_brace = frag.text.startswith("{")
            if (
                frag.single_char
                and not out.rstrip().endswith(("}", " "))
                and out[-1:].isalnum()
                and self.rng.random() < 0.3
            ):
                out += frag.text
            else:
                out += self.op(starts_brace) + frag.text
        return out

    # -- constructors -------------------------------------------------------
    def gen(self, level: int, extra: int = 0) -> _Frag:
        """Fragment of exactly ``level`` holding exactly ``extra`` row breaks."""
        if level == 0:
            return self.atom()
        if extra > 0:
            choices = ["env", "env"]
            if level >= 3:
                choices.append("wrap")
            if self.size > 0:
                choices.append("combo")
            kind = self.rng.choice(choices)
            if kind == "env":
                return self.env(level, extra + 1)
            if kind == "wrap":
                return self.wrap(level, extra)
            return self.combo(level, extra)
        if level == 1:
            return self.flat()
        choices = ["wrap", "wrap", "wrap", "env"]
        if self.size > 0:
            choices.append("combo")
        kind = self.rng.choice(choices)
        if kind == "env":
            return self.env(level, 1)
        if kind == "combo":
            return self.combo(level, 0)
        return self.wrap(level, 0)

    def combo(self, level: int, extra: int) -> _Frag:
        self.size -= 1
        try:
            parts = [self.gen(level, extra), self.gen(self.rng.randint(0, level))]
        finally:
            self.size += 1
        if self.rng.random() < 0.5:
            parts.reverse()
        return _Frag(self.join(parts), level)

    def flat(self) -> _Frag:
        rng = self.rng
        kind = rng.choice(("ops", "ops", "script", "script", "frac", "sqrt", "accent", "paren", "rm"))
        if kind == "ops":
            n = rng.randint(2, 3)
            return _Frag(self.join([self.atom() for _ in range(n)]), 1)
        if kind == "script":
            base = self.atom().text
            r = rng.random()
            if r < 0.45:
                return _Frag(base + "^" + self.braced(self.atom()), 1)
            if r < 0.8:
                return _Frag(base + "_" + self.braced(self.atom()), 1)
            return _Frag(base + "_" + self.braced(self.atom()) + "^" + self.braced(self.atom()), 1)
        if kind == "frac":
            return _Frag(
                rng.choice(FRACS) + self.braced(self.atom(), True) + self.braced(self.atom(), True), 1
            )
        if kind == "sqrt":
            return _Frag("\\sqrt{" + self.atom().text + "}", 1)
        if kind == "accent":
            return _Frag(rng.choice(ACCENTS) + "{" + self.atom().text + "}", 1)
        if kind == "rm":
            return _Frag("{\\rm " + rng.choice(LETTERS) + "}", 1)
        inner = self.join([self.atom() for _ in range(rng.randint(2, 3))])
        if rng.random() < 0.5:
            return _Frag("\\left(" + inner + "\\right)", 1)
        return _Frag("(" + inner + ")", 1)

    def wrap(self, level: int, extra: int) -> _Frag:
        """One constructor layer around a fragment of ``level - 1``."""
        rng = self.rng
        inner = self.gen(level - 1, extra)
        kind = rng.choice(("script", "frac", "frac", "sqrt", "accent"))
        if kind == "script":
            if rng.random() < 0.2 and level >= 2:
                base = "{" + self.gen(rng.randint(0, level - 1)).text + "}"
            else:
                base = self.atom().text
            slot = rng.choice("^_")
            text = base + slot + self.braced(inner)
            if rng.random() < 0.3:
                other = "_" if slot == "^" else "^"
                text += other + self.braced(self.gen(rng.randint(0, level - 1)))
            return _Frag(text, level)
        if kind == "frac":
            other = self.gen(rng.randint(0, level - 1))
            num, den = (inner, other) if rng.random() < 0.5 else (other, inner)
            return _Frag(rng.choice(FRACS) + self.braced(num, True) + self.braced(den, True), level)
        if kind == "sqrt":
            degree = "[" + rng.choice(DIGITS) + "]" if rng.random() < 0.2 else ""
            return _Frag("\\sqrt" + degree + "{" + inner.text + "}", level)
        return _Frag(rng.choice(ACCENTS) + "{" + inner.text + "}", level)

    def env(self, level: int, rows: int) -> _Frag:
        rng = self.rng
        name = rng.choice(ENVS)
        cols = rng.randint(1, 1 + min(self.size, 2))
        cell_cap = 1 if level == 2 else level - 1
        cells = [[None] * cols for _ in range(rows)]
        if level >= 3:
            r, c = rng.randrange(rows), rng.randrange(cols)
            cells[r][c] = self.gen(level - 1)
        for r in range(rows):
            for c in range(cols):
                if cells[r][c] is None:
                    cells[r][c] = self.gen(rng.randint(0, min(cell_cap, 1)))
        body = "\\\\".join("&".join(cell.text for cell in row) for row in cells)
        return _Frag("\\begin{" + name + "}" + body + "\\end{" + name + "}", level)


def _minimal(level: int, lines: int) -> str:
    text = "x"
    for _ in range(level):
        text = "x^{" + text + "}"
    return text + "\\\\x" * (lines - 1)


def _attempt(gen: _Generator, level: int, lines: int) -> str:
    rng = gen.rng
    if level == 1:
        parts = [gen.gen(1)] + [gen.gen(rng.randint(0, 1)) for _ in range(lines - 1)]
        return "\\\\".join(p.text for p in parts)
    top = 0 if rng.random() < 0.5 else rng.randint(0, lines - 1)
    first = gen.gen(level, lines - 1 - top)
    rest = [gen.gen(rng.randint(0, level)) for _ in range(top)]
    return "\\\\".join([first.text] + [p.text for p in rest])


def synth_formula(spec: SynthSpec) -> str:
    """Generate a formula measuring exactly ``spec.target_level`` and
    ``spec.target_lines``, with at most ``spec.max_chars`` characters.

    Deterministic in ``spec.rng_seed``. Raises :class:`InfeasibleSpec` when
    no formula can satisfy the spec (e.g. level 0 spanning several lines).
    """
    level, lines = spec.target_level, spec.target_lines
    if not 0 <= level <= MAX_LEVEL:
        raise InfeasibleSpec(f"target_level must be in [0, {MAX_LEVEL}], got {level}")
    if lines < 1:
        raise InfeasibleSpec(f"target_lines must be >= 1, got {lines}")
    if level == 0 and lines > 1:
        raise InfeasibleSpec("a level-0 formula is a single symbol and cannot span rows")
    minimal_chars = 1 if level == 0 else level + lines
    if minimal_chars > spec.max_chars:
        raise InfeasibleSpec(
            f"level {level} over {lines} lines needs at least {minimal_chars} chars"
        )
    rng = random.Random(spec.rng_seed)
    if level == 0:
        return _Generator(rng, 0).atom().text.strip()
    for attempt in range(12):
        gen = _Generator(rng, max(0, 2 - attempt // 4))
        text = _attempt(gen, level, lines)
        ast = parse_latex(text)
        if ast.level != level or ast.line_count != lines:
            raise AssertionError(
                f"synthesizer produced {text!r} measuring level {ast.level}, "
                f"lines {ast.line_count}; wanted {level}, {lines}"
            )
        if ast.char_count <= spec.max_chars:
            return text
    return _minimal(level, lines)


def synth_corpus(count: int, levels=(1,), lines=(1,), seed: int = 0,
                 max_chars: int = 400, id_prefix: str = "syn") -> List[CorpusRecord]:
    """``count`` synthetic records cycling through ``levels`` x ``lines``.

    Domains rotate through :data:`DOMAINS`; each record's only label is its
    own source. Seeds are derived per record, so a record does not depend on
    ``count``.
    """
    combos = [(lv, ln) for lv in levels for ln in lines]
    out = []
    for k in range(count):
        lv, ln = combos[k % len(combos)]
        spec = SynthSpec(lv, ln, max_chars, _record_seed(seed, k))
        text = synth_formula(spec)
        out.append(CorpusRecord(
            id=f"{id_prefix}-{k:06d}",
            domain=DOMAINS[k % len(DOMAINS)],
            latex=text,
            labels=(text,),
            display_mode="display" if ln > 1 or lv > 1 else "inline",
        ))
    return out


def _record_seed(seed: int, k: int) -> int:
    return (int(seed) * 1_000_003 + k) & 0xFFFFFFFFFFFF
