"""Canonical LaTeX output for AST nodes."""

from __future__ import annotations

import re

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

_TRAILING_WORD_COMMAND = re.compile(r"(?<!\\)(?:\\\\)*\\[A-Za-z]+$")


def _join(pieces) -> str:
    out = []
    last = ""
    for piece in pieces:
        if not piece:
            continue
        if last and piece[0].isascii() and piece[0].isalpha() and _TRAILING_WORD_COMMAND.search(last):
            out.append(" ")
        out.append(piece)
        last = piece
    return "".join(out)


def serialize_node(node) -> str:
    if isinstance(node, Atom):
        return node.symbol
    if isinstance(node, LineBreak):
        return "\\\\"
    if isinstance(node, Sequence):
        return _join(serialize_node(k) for k in node.children)
    if isinstance(node, Group):
        return "{" + _join(serialize_node(k) for k in node.children) + "}"
    if isinstance(node, Script):
        out = serialize_node(node.base)
        if node.sub is not None:
            out += "_{" + serialize_node(node.sub) + "}"
        if node.sup is not None:
            out += "^{" + serialize_node(node.sup) + "}"
        return out
    if isinstance(node, Frac):
        return (
            "\\" + node.style
            + "{" + serialize_node(node.numerator) + "}"
            + "{" + serialize_node(node.denominator) + "}"
        )
    if isinstance(node, Radical):
        deg = "" if node.degree is None else "[" + serialize_node(node.degree) + "]"
        return "\\sqrt" + deg + "{" + serialize_node(node.radicand) + "}"
    if isinstance(node, GenericCommand):
        return "\\" + node.name + "".join("{" + serialize_node(a) + "}" for a in node.args)
    if isinstance(node, Environment):
        body = "\\\\".join(
            "&".join(serialize_node(cell) for cell in row) for row in node.rows
        )
        return "\\begin{" + node.name + "}" + body + "\\end{" + node.name + "}"
    raise TypeError(f"not an AST node: {node!r}")


def serialize(ast) -> str:
    """Canonical string: braces around every script/command argument and no
    whitespace except where a command name would otherwise run into a letter."""
    if isinstance(ast, FormulaAst):
        return serialize_node(ast.root)
    return serialize_node(ast)
