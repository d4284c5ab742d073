"""Immutable AST node types for LaTeX math.

Nodes are frozen dataclasses holding tuples, so ``==`` is structural
equality and trees can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class Atom:
    symbol: str

    @property
    def is_operator(self) -> bool:
        return bool(self.symbol) and not self.symbol.isalnum()


@dataclass(frozen=True)
class Sequence:
    children: Tuple["Node", ...] = ()


@dataclass(frozen=True)
class Group:
    children: Tuple["Node", ...] = ()


@dataclass(frozen=True)
class Script:
    base: "Node"
    sub: Optional[Sequence] = None
    sup: Optional[Sequence] = None

    def __post_init__(self):
        if self.sub is None and self.sup is None:
            raise ValueError("Script needs a subscript or a superscript")


@dataclass(frozen=True)
class Frac:
    numerator: Sequence
    denominator: Sequence
    style: str = "frac"


@dataclass(frozen=True)
class Radical:
    radicand: Sequence
    degree: Optional[Sequence] = None


@dataclass(frozen=True)
class GenericCommand:
    name: str
    args: Tuple[Sequence, ...] = ()


@dataclass(frozen=True)
class Environment:
    name: str
    rows: Tuple[Tuple[Sequence, ...], ...]

    def __post_init__(self):
        if not self.rows or any(not row for row in self.rows):
            raise ValueError("Environment rows must be non-empty")


@dataclass(frozen=True)
class LineBreak:
    """A ``\\\\`` outside of any environment's row structure."""


Node = Union[Atom, Sequence, Group, Script, Frac, Radical, GenericCommand, Environment, LineBreak]


def children(node) -> tuple:
    """Positional children of ``node``; absent optional slots are ``None``.

    Environments expose their rows (tuples of cells) as children so that a
    node path steps through ``row index`` and then ``cell index``.
    """
    if isinstance(node, (Sequence, Group)):
        return node.children
    if isinstance(node, Script):
        return (node.base, node.sub, node.sup)
    if isinstance(node, Frac):
        return (node.numerator, node.denominator)
    if isinstance(node, Radical):
        return (node.degree, node.radicand)
    if isinstance(node, GenericCommand):
        return node.args
    if isinstance(node, Environment):
        return node.rows
    if isinstance(node, tuple):
        return node
    return ()


def walk(node):
    """Yield ``node`` and every descendant, depth first."""
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur is None:
            continue
        if isinstance(cur, tuple):
            stack.extend(reversed(cur))
            continue
        yield cur
        stack.extend(reversed(children(cur)))


@dataclass(frozen=True)
class FormulaAst:
    """A parsed formula with its cached structural measurements.

    Equality compares the tree only; ``source`` and ``warnings`` are
    informational.
    """

    root: Sequence
    source: str = field(default="", compare=False)
    level: int = field(default=0, compare=False)
    char_count: int = field(default=0, compare=False)
    line_count: int = field(default=1, compare=False)
    warnings: Tuple[str, ...] = field(default=(), compare=False)
