"""Hierarchical level, character count and line count of a tree."""

from __future__ import annotations

from .nodes import (
    Atom,
    Environment,
    FormulaAst,
    Frac,
    GenericCommand,
    Group,
    LineBreak,
    Radical,
    Script,
    Sequence,
)


def _root(node):
    return node.root if isinstance(node, FormulaAst) else node


def hierarchical_level(node) -> int:
    """Nesting level: 0 for a single symbol, 1 for flat combinations,
    at least 2 for environments, one more per constructor layer."""
    node = _root(node)
    if isinstance(node, (Atom, LineBreak)):
        return 0
    if isinstance(node, (Sequence, Group)):
        kids = node.children
        flat = 1 if len(kids) >= 2 or any(
            isinstance(k, Atom) and k.is_operator for k in kids
        ) else 0
        return max([flat] + [hierarchical_level(k) for k in kids])
    if isinstance(node, Script):
        parts = [p for p in (node.base, node.sub, node.sup) if p is not None]
        return 1 + max(hierarchical_level(p) for p in parts)
    if isinstance(node, Frac):
        return 1 + max(hierarchical_level(node.numerator), hierarchical_level(node.denominator))
    if isinstance(node, Radical):
        parts = [node.radicand] if node.degree is None else [node.radicand, node.degree]
        return 1 + max(hierarchical_level(p) for p in parts)
    if isinstance(node, GenericCommand):
        if not node.args:
            return 0
        return 1 + max(hierarchical_level(a) for a in node.args)
    if isinstance(node, Environment):
        inner = max(hierarchical_level(cell) for row in node.rows for cell in row)
        return max(2, 1 + inner)
    raise TypeError(f"not an AST node: {node!r}")


def char_count(node) -> int:
    """Visible-symbol count: leaf atoms plus one per command head.

    Braces, ampersands and row breaks contribute nothing.
    """
    node = _root(node)
    if isinstance(node, Atom):
        return 1 if node.symbol else 0
    if isinstance(node, LineBreak):
        return 0
    if isinstance(node, (Sequence, Group)):
        return sum(char_count(k) for k in node.children)
    if isinstance(node, Script):
        return sum(char_count(p) for p in (node.base, node.sub, node.sup) if p is not None)
    if isinstance(node, Frac):
        return 1 + char_count(node.numerator) + char_count(node.denominator)
    if isinstance(node, Radical):
        deg = 0 if node.degree is None else char_count(node.degree)
        return 1 + deg + char_count(node.radicand)
    if isinstance(node, GenericCommand):
        return 1 + sum(char_count(a) for a in node.args)
    if isinstance(node, Environment):
        return 1 + sum(char_count(cell) for row in node.rows for cell in row)
    raise TypeError(f"not an AST node: {node!r}")


def _row_breaks(node) -> int:
    if isinstance(node, LineBreak):
        return 1
    if isinstance(node, (Sequence, Group)):
        return sum(_row_breaks(k) for k in node.children)
    if isinstance(node, Script):
        return sum(_row_breaks(p) for p in (node.base, node.sub, node.sup) if p is not None)
    if isinstance(node, Frac):
        return _row_breaks(node.numerator) + _row_breaks(node.denominator)
    if isinstance(node, Radical):
        deg = 0 if node.degree is None else _row_breaks(node.degree)
        return deg + _row_breaks(node.radicand)
    if isinstance(node, GenericCommand):
        return sum(_row_breaks(a) for a in node.args)
    if isinstance(node, Environment):
        return len(node.rows) - 1 + sum(_row_breaks(c) for row in node.rows for c in row)
    return 0


def line_count(node) -> int:
    """1 + every row break in the tree, inside environments or not."""
    return 1 + _row_breaks(_root(node))


def measure(node):
    """``(level, char_count, row_breaks)`` in one traversal."""
    if isinstance(node, Atom):
        return 0, (1 if node.symbol else 0), 0
    if isinstance(node, LineBreak):
        return 0, 0, 1
    if isinstance(node, (Sequence, Group)):
        kids = node.children
        level = 1 if len(kids) >= 2 else 0
        chars = breaks = 0
        for k in kids:
            lv, ch, br = measure(k)
            if lv > level:
                level = lv
            elif not level and isinstance(k, Atom) and k.is_operator:
                level = 1
            chars += ch
            breaks += br
        return level, chars, breaks
    if isinstance(node, Script):
        parts = [p for p in (node.base, node.sub, node.sup) if p is not None]
        head = 0
    elif isinstance(node, Frac):
        parts = [node.numerator, node.denominator]
        head = 1
    elif isinstance(node, Radical):
        parts = [node.radicand] if node.degree is None else [node.radicand, node.degree]
        head = 1
    elif isinstance(node, GenericCommand):
        parts = list(node.args)
        head = 1
    elif isinstance(node, Environment):
        parts = [cell for row in node.rows for cell in row]
        sub = [measure(p) for p in parts]
        return (
            max(2, 1 + max(s[0] for s in sub)),
            1 + sum(s[1] for s in sub),
            len(node.rows) - 1 + sum(s[2] for s in sub),
        )
    else:
        raise TypeError(f"not an AST node: {node!r}")
    if not parts:
        return 0, head, 0
    sub = [measure(p) for p in parts]
    return (
        1 + max(s[0] for s in sub),
        head + sum(s[1] for s in sub),
        sum(s[2] for s in sub),
    )
