"""Recursive-descent parser from tokens to :class:`FormulaAst`."""

from __future__ import annotations

from ..errors import MismatchedEnvironment, UnbalancedBraces
from .measure import measure
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
from .tokens import TokenKind, significant, tokenize

FRAC_COMMANDS = frozenset({"frac", "dfrac", "tfrac", "cfrac"})

DANGLING_SCRIPT = "DanglingScript"

_ROOT, _GROUP, _CELL, _DEGREE = "root", "group", "cell", "degree"

# tokens that end an argument without being consumed by it
_NOT_AN_ARGUMENT = frozenset(
    {
        TokenKind.CLOSE_GROUP,
        TokenKind.AMPERSAND,
        TokenKind.ROW_BREAK,
        TokenKind.ENV_END,
        TokenKind.SUPERSCRIPT,
        TokenKind.SUBSCRIPT,
    }
)


class _NoDegree(Exception):
    """Internal: ``\\sqrt[`` was not followed by a closable degree."""


class _Parser:
    def __init__(self, tokens):
        self.toks = significant(tokens)
        self.i = 0
        self.warnings = []

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def advance(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def items(self, ctx, opener=None, env=None):
        out = []
        while True:
            tok = self.peek()
            if tok is None:
                if ctx == _ROOT:
                    return out
                if ctx == _GROUP:
                    raise UnbalancedBraces(opener.position)
                if ctx == _CELL:
                    raise MismatchedEnvironment(env, None)
                raise _NoDegree()
            kind = tok.kind
            if kind is TokenKind.CLOSE_GROUP:
                if ctx == _GROUP:
                    self.advance()
                    return out
                if ctx == _DEGREE:
                    raise _NoDegree()
                raise UnbalancedBraces(tok.position)
            if kind is TokenKind.ENV_END:
                if ctx == _CELL:
                    return out
                if ctx == _GROUP:
                    raise UnbalancedBraces(opener.position)
                if ctx == _DEGREE:
                    raise _NoDegree()
                raise MismatchedEnvironment(None, tok.name, tok.position)
            if ctx == _CELL and kind in (TokenKind.AMPERSAND, TokenKind.ROW_BREAK):
                return out
            if ctx == _DEGREE and kind is TokenKind.OPERATOR and tok.text == "]":
                self.advance()
                return out
            if kind in (TokenKind.SUPERSCRIPT, TokenKind.SUBSCRIPT):
                self.advance()
                arg = self.argument()
                slot = "sup" if kind is TokenKind.SUPERSCRIPT else "sub"
                if not out or isinstance(out[-1], LineBreak):
                    self.warnings.append(f"{DANGLING_SCRIPT}@{tok.position}")
                    out.append(Script(Atom(""), **{slot: arg}))
                    continue
                prev = out.pop()
                if isinstance(prev, Script) and getattr(prev, slot) is None:
                    out.append(
                        Script(
                            prev.base,
                            arg if slot == "sub" else prev.sub,
                            arg if slot == "sup" else prev.sup,
                        )
                    )
                else:
                    out.append(Script(prev, **{slot: arg}))
                continue
            out.append(self.primary())

    def primary(self):
        tok = self.peek()
        kind = tok.kind
        if kind is TokenKind.OPEN_GROUP:
            self.advance()
            return Group(tuple(self.items(_GROUP, opener=tok)))
        if kind is TokenKind.ENV_BEGIN:
            return self.environment()
        if kind is TokenKind.COMMAND:
            return self.command()
        self.advance()
        if kind is TokenKind.ROW_BREAK:
            return LineBreak()
        return Atom(tok.text)

    def argument(self):
        tok = self.peek()
        if tok is None or tok.kind in _NOT_AN_ARGUMENT:
            return Sequence(())
        if tok.kind is TokenKind.OPEN_GROUP:
            self.advance()
            return Sequence(tuple(self.items(_GROUP, opener=tok)))
        return Sequence((self.primary(),))

    def command(self):
        tok = self.advance()
        name = tok.name
        if name in FRAC_COMMANDS:
            num = self.argument()
            den = self.argument()
            return Frac(num, den, name)
        if name == "sqrt":
            degree = None
            nxt = self.peek()
            if nxt is not None and nxt.kind is TokenKind.OPERATOR and nxt.text == "[":
                mark, nwarn = self.i, len(self.warnings)
                self.advance()
                try:
                    degree = Sequence(tuple(self.items(_DEGREE)))
                except _NoDegree:
                    self.i = mark
                    del self.warnings[nwarn:]
                    degree = None
            return Radical(self.argument(), degree)
        args = []
        if name[:1].isalpha():
            while True:
                nxt = self.peek()
                if nxt is None or nxt.kind is not TokenKind.OPEN_GROUP:
                    break
                self.advance()
                args.append(Sequence(tuple(self.items(_GROUP, opener=nxt))))
        return GenericCommand(name, tuple(args))

    def environment(self):
        begin = self.advance()
        name = begin.name
        rows, row = [], []
        while True:
            cell = Sequence(tuple(self.items(_CELL, env=name)))
            row.append(cell)
            tok = self.advance()
            if tok.kind is TokenKind.AMPERSAND:
                continue
            if tok.kind is TokenKind.ROW_BREAK:
                rows.append(tuple(row))
                row = []
                continue
            # ENV_END
            if tok.name != name:
                raise MismatchedEnvironment(name, tok.name, tok.position)
            rows.append(tuple(row))
            return Environment(name, tuple(rows))


def build_ast(root: Sequence, source: str = "", warnings=()) -> FormulaAst:
    level, chars, breaks = measure(root)
    return FormulaAst(
        root=root,
        source=source,
        level=level,
        char_count=chars,
        line_count=1 + breaks,
        warnings=tuple(warnings),
    )


def parse(tokens) -> FormulaAst:
    """Parse a token stream from :func:`tokenize` into a :class:`FormulaAst`.

    Scripts bind to the preceding node. A script with nothing to bind to gets
    an empty ``Atom`` base and a ``DanglingScript`` warning.
    """
    parser = _Parser(tokens)
    root = Sequence(tuple(parser.items(_ROOT)))
    source = "".join(t.text for t in tokens)
    return build_ast(root, source, parser.warnings)


def parse_latex(source: str) -> FormulaAst:
    return parse(tokenize(source))
