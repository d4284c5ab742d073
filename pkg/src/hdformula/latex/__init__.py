"""Tokenizer, parser, serializer and structural measurements for LaTeX math."""

from .measure import char_count, hierarchical_level, line_count
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
    children,
    walk,
)
from .parser import parse, parse_latex
from .serialize import serialize, serialize_node
from .tokens import Token, TokenKind, join_tokens, significant, tokenize

__all__ = [
    "Atom", "Environment", "FormulaAst", "Frac", "GenericCommand", "Group",
    "LineBreak", "Radical", "Script", "Sequence", "Token", "TokenKind",
    "char_count", "children", "hierarchical_level", "join_tokens", "line_count",
    "parse", "parse_latex", "serialize", "serialize_node", "significant",
    "tokenize", "walk",
]
