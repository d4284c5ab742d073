"""Sub-formula decomposition, coverage-constrained sampling, random crops
and render manifests for building training instances."""

from __future__ import annotations

import enum
import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from .errors import TooShort
from .latex import (
    Environment,
    Frac,
    GenericCommand,
    Group,
    LineBreak,
    Radical,
    Script,
    Sequence,
    TokenKind,
    char_count,
    parse_latex,
    serialize,
    serialize_node,
    significant,
    tokenize,
)
from .latex.nodes import Atom, FormulaAst

DEFAULT_N = 4
DEFAULT_THETA = 0.7
DEFAULT_LAMBDA = 0.3
DEFAULT_SIZE = (448, 448)
SAMPLING_RESTARTS = 32
CROP_FRACTION = (0.5, 0.9)


def derive_seed(base_seed: int, *keys) -> int:
    """Stable 64-bit seed from a base seed and any hashable-by-repr keys."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(base_seed),) + keys).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


# ---------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True)
class SubFormula:
    node_path: Tuple[int, ...]
    latex: str
    char_count: int
    kind: str
    # consecutive siblings covered, starting at node_path[-1] (runs only)
    span: int = 1


def _run_bounds(children):
    runs, start = [], None
    for i, child in enumerate(children):
        sep = isinstance(child, LineBreak) or (isinstance(child, Atom) and child.is_operator)
        if sep:
            if start is not None:
                runs.append((start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        runs.append((start, len(children)))
    return runs


def enumerate_subformulas(ast: FormulaAst, min_chars: int = 1) -> List[SubFormula]:
    """All standalone-renderable parts with at least ``min_chars`` characters.

    Parts are groups, fraction arguments, radicands, script bases,
    environment cells and rows, and operator-delimited runs of the top-level
    sequence. Each part appears once, in depth-first order.
    """
    found = {}

    def add(path, latex, node_chars, kind, span=1):
        key = (path, span)
        if node_chars >= min_chars and key not in found:
            found[key] = SubFormula(path, latex, node_chars, kind, span)

    root = ast.root
    kids = root.children
    for start, end in _run_bounds(kids):
        if end - start < len(kids):
            seg = Sequence(kids[start:end])
            add((start,), serialize_node(seg), char_count(seg), "run", end - start)

    def visit(node, path):
        if isinstance(node, Group):
            add(path, serialize_node(node), char_count(node), "group")
        if isinstance(node, (Sequence, Group)):
            for i, k in enumerate(node.children):
                visit(k, path + (i,))
        elif isinstance(node, Script):
            add(path + (0,), serialize_node(node.base), char_count(node.base), "script-base")
            visit(node.base, path + (0,))
            if node.sub is not None:
                visit(node.sub, path + (1,))
            if node.sup is not None:
                visit(node.sup, path + (2,))
        elif isinstance(node, Frac):
            add(path + (0,), serialize_node(node.numerator), char_count(node.numerator), "numerator")
            add(path + (1,), serialize_node(node.denominator), char_count(node.denominator), "denominator")
            visit(node.numerator, path + (0,))
            visit(node.denominator, path + (1,))
        elif isinstance(node, Radical):
            add(path + (1,), serialize_node(node.radicand), char_count(node.radicand), "radicand")
            if node.degree is not None:
                visit(node.degree, path + (0,))
            visit(node.radicand, path + (1,))
        elif isinstance(node, GenericCommand):
            for i, arg in enumerate(node.args):
                visit(arg, path + (i,))
        elif isinstance(node, Environment):
            for r, row in enumerate(node.rows):
                row_env = Environment(node.name, (row,))
                add(path + (r,), serialize_node(row_env), char_count(row_env), "row")
                for c, cell in enumerate(row):
                    add(path + (r, c), serialize_node(cell), char_count(cell), "cell")
                    visit(cell, path + (r, c))

    visit(root, ())
    return list(found.values())


def whole_formula(ast: FormulaAst) -> SubFormula:
    return SubFormula((), serialize(ast), ast.char_count, "whole", 0)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SubFormulaSample:
    parts: Tuple[SubFormula, ...]
    # False when no <= n candidates reach the target and the whole formula
    # was returned instead
    feasible: bool
    target: float

    @property
    def coverage(self) -> int:
        return sum(p.char_count for p in self.parts)


def sample_subformulas(ast: FormulaAst, n: int = DEFAULT_N, theta: float = DEFAULT_THETA,
                       rng_seed: int = 0) -> SubFormulaSample:
    """Pick at most ``n`` sub-formulas whose character counts sum to at least
    ``theta`` of the formula's.

    Random restarts choose a first part uniformly and complete greedily with
    the largest remaining parts. Overlapping parts are allowed. If no subset
    of size <= n reaches the target, the whole formula is returned with
    ``feasible=False``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < theta <= 1:
        raise ValueError("theta must be in (0, 1]")
    target = theta * ast.char_count
    candidates = enumerate_subformulas(ast, 1)
    by_size = sorted(candidates, key=lambda s: -s.char_count)
    if sum(s.char_count for s in by_size[:n]) < target or not candidates:
        return SubFormulaSample((whole_formula(ast),), False, target)

    rng = random.Random(rng_seed)
    for _ in range(SAMPLING_RESTARTS):
        first = rng.randrange(len(candidates))
        chosen = [candidates[first]]
        total = chosen[0].char_count
        for cand in by_size:
            if total >= target or len(chosen) >= n:
                break
            if cand is candidates[first]:
                continue
            chosen.append(cand)
            total += cand.char_count
        if total >= target:
            return SubFormulaSample(tuple(chosen), True, target)
    # the top-n prefix is guaranteed to reach the target
    chosen, total = [], 0
    for cand in by_size:
        if total >= target:
            break
        chosen.append(cand)
        total += cand.char_count
    return SubFormulaSample(tuple(chosen), True, target)


# ---------------------------------------------------------------------------
# random crops

_TRIM_TAIL_OPS = frozenset("+-=<>,;:*/")
_TRIM_HEAD_OPS = frozenset("+=<>,;:*/")
_TRIM_TAIL_KINDS = frozenset({TokenKind.SUPERSCRIPT, TokenKind.SUBSCRIPT, TokenKind.AMPERSAND, TokenKind.ROW_BREAK})
_TRIM_HEAD_KINDS = _TRIM_TAIL_KINDS


@dataclass(frozen=True)
class CropSpec:
    token_start: int
    token_end: int
    fraction_of_tokens: float
    latex: str


def _partners(tokens):
    """Map each brace / environment / sqrt-bracket token index to its mate."""
    partner = {}
    stack = []
    for i, tok in enumerate(tokens):
        kind = tok.kind
        if kind in (TokenKind.OPEN_GROUP, TokenKind.ENV_BEGIN):
            stack.append(i)
        elif kind is TokenKind.OPERATOR and tok.text == "[":
            prev = tokens[i - 1] if i else None
            if prev is not None and prev.kind is TokenKind.COMMAND and prev.name == "sqrt":
                stack.append(i)
        elif kind is TokenKind.OPERATOR and tok.text == "]":
            if stack and tokens[stack[-1]].text == "[":
                j = stack.pop()
                partner[i], partner[j] = j, i
        elif kind in (TokenKind.CLOSE_GROUP, TokenKind.ENV_END):
            # a "[" left open was not a degree after all
            while stack and tokens[stack[-1]].text == "[":
                stack.pop()
            if stack:
                j = stack.pop()
                partner[i], partner[j] = j, i
    return partner


def _balance(start, end, partner):
    changed = True
    while changed:
        changed = False
        for k in range(start, end):
            p = partner.get(k)
            if p is not None and not start <= p < end:
                start, end = min(start, p), max(end, p + 1)
                changed = True
                break
    return start, end


def _trimmable(tok, head: bool) -> bool:
    kinds = _TRIM_HEAD_KINDS if head else _TRIM_TAIL_KINDS
    ops = _TRIM_HEAD_OPS if head else _TRIM_TAIL_OPS
    return tok.kind in kinds or (tok.kind is TokenKind.OPERATOR and tok.text in ops)


def random_crop(ast: FormulaAst, rng_seed: int) -> CropSpec:
    """A balanced contiguous token window covering 50-90% of the tokens.

    The window is widened just enough to close every brace, environment and
    ``\\sqrt`` degree it opens, then dangling binary operators and script
    markers at its edges are dropped. Raises :class:`TooShort` for formulas
    with fewer than two tokens.
    """
    source = ast.source or serialize(ast)
    tokens = significant(tokenize(source))
    total = len(tokens)
    if total < 2:
        raise TooShort(f"formula has {total} token(s); random crop needs at least 2")
    rng = random.Random(rng_seed)
    frac = rng.uniform(*CROP_FRACTION)
    length = max(1, min(total, round(frac * total)))
    start = rng.randint(0, total - length)
    start, end = _balance(start, start + length, _partners(tokens))
    lo, hi = start, end
    while hi - lo > 1 and _trimmable(tokens[hi - 1], head=False):
        hi -= 1
    while hi - lo > 1 and _trimmable(tokens[lo], head=True):
        lo += 1
    if not any(t.kind not in _TRIM_TAIL_KINDS for t in tokens[lo:hi]):
        lo, hi = start, end
    first, last = tokens[lo], tokens[hi - 1]
    latex = source[first.position : last.position + len(last.text)]
    return CropSpec(lo, hi, (hi - lo) / total, latex)


def whole_crop(ast: FormulaAst) -> Optional[CropSpec]:
    source = ast.source or serialize(ast)
    tokens = significant(tokenize(source))
    if not tokens:
        return None
    last = tokens[-1]
    return CropSpec(0, len(tokens), 1.0, source[tokens[0].position : last.position + len(last.text)])


# ---------------------------------------------------------------------------
# training instances


class CropMode(enum.Enum):
    NO_CROP = "no-crop"
    FULL_RANDOM_CROP = "full-random-crop"
    FULL_SUBFORMULA_CROP = "full-subformula-crop"
    HYBRID = "hybrid"


class PartKind(enum.Enum):
    SUBFORMULA_CROP = "SubFormulaCrop"
    RANDOM_CROP = "RandomCrop"


@dataclass(frozen=True)
class SamplePlan:
    mode: CropMode = CropMode.HYBRID
    n: int = DEFAULT_N
    coverage_theta: float = DEFAULT_THETA
    lambda_percent: float = DEFAULT_LAMBDA
    rng_seed: int = 0

    def __post_init__(self):
        mode = CropMode(self.mode)
        object.__setattr__(self, "mode", mode)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < self.coverage_theta <= 1:
            raise ValueError("coverage_theta must be in (0, 1]")
        if not 0 <= self.lambda_percent <= 1:
            raise ValueError("lambda_percent must be in [0, 1]")
        # the full-crop modes pin the random-crop rate
        if mode is CropMode.FULL_RANDOM_CROP:
            object.__setattr__(self, "lambda_percent", 1.0)
        elif mode is CropMode.FULL_SUBFORMULA_CROP:
            object.__setattr__(self, "lambda_percent", 0.0)

    def with_seed(self, seed: int) -> "SamplePlan":
        return SamplePlan(self.mode, self.n, self.coverage_theta, self.lambda_percent, seed)


Part = Union[SubFormula, CropSpec]


@dataclass(frozen=True)
class TrainingInstance:
    main: FormulaAst
    parts: Tuple[Part, ...] = ()
    part_kind: Optional[PartKind] = None
    labels_available: Tuple[bool, ...] = ()
    # sub-formula coverage could not be met; parts hold the whole formula
    coverage_fallback: bool = False
    # formula too short to crop; parts hold one whole-formula window
    crop_fallback: bool = False

    def part_latex(self, i: int) -> str:
        return self.parts[i].latex


def _random_crops(ast, n, seed):
    parts, fallback = [], False
    for k in range(n):
        try:
            parts.append(random_crop(ast, derive_seed(seed, "crop", k)))
        except TooShort:
            whole = whole_crop(ast)
            fallback = True
            if whole is not None:
                parts.append(whole)
            break
    return parts, fallback


def make_training_instance(ast: FormulaAst, plan: SamplePlan) -> TrainingInstance:
    """Build one training instance according to ``plan.mode``.

    Hybrid plans draw once per instance: with probability
    ``plan.lambda_percent`` the parts are label-free random crops, otherwise
    labelled sub-formulas.
    """
    mode = plan.mode
    if mode is CropMode.NO_CROP:
        return TrainingInstance(ast)
    rng = random.Random(plan.rng_seed)
    use_random = mode is CropMode.FULL_RANDOM_CROP or (
        mode is CropMode.HYBRID and rng.random() < plan.lambda_percent
    )
    if use_random:
        parts, fallback = _random_crops(ast, plan.n, plan.rng_seed)
        return TrainingInstance(
            ast, tuple(parts), PartKind.RANDOM_CROP, (False,) * len(parts), crop_fallback=fallback
        )
    sample = sample_subformulas(ast, plan.n, plan.coverage_theta, derive_seed(plan.rng_seed, "sub"))
    return TrainingInstance(
        ast,
        sample.parts,
        PartKind.SUBFORMULA_CROP,
        (True,) * len(sample.parts),
        coverage_fallback=not sample.feasible,
    )


# ---------------------------------------------------------------------------
# render manifests


@dataclass(frozen=True)
class ManifestEntry:
    latex: str
    role: str
    height: int = DEFAULT_SIZE[0]
    width: int = DEFAULT_SIZE[1]


@dataclass(frozen=True)
class RenderManifest:
    instance_id: str
    entries: Tuple[ManifestEntry, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "entries": [
                {"latex": e.latex, "role": e.role, "height": e.height, "width": e.width}
                for e in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, obj) -> "RenderManifest":
        return cls(
            obj["instance_id"],
            tuple(ManifestEntry(e["latex"], e["role"], e["height"], e["width"]) for e in obj["entries"]),
        )


def emit_render_manifest(instance: TrainingInstance, instance_id: str,
                         size: Tuple[int, int] = DEFAULT_SIZE) -> RenderManifest:
    height, width = size
    main_latex = instance.main.source.strip() or serialize(instance.main)
    entries = [ManifestEntry(main_latex, "main", height, width)]
    for part in instance.parts:
        role = "crop" if isinstance(part, CropSpec) else "sub"
        entries.append(ManifestEntry(part.latex, role, height, width))
    return RenderManifest(instance_id, tuple(entries))


def reparse_char_count(part: SubFormula) -> int:
    return parse_latex(part.latex).char_count
