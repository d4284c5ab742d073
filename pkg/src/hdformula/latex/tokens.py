"""Lossless lexer for LaTeX math source."""

from __future__ import annotations

import enum
import re
from typing import List, NamedTuple

from ..errors import IncompleteEscape, UnterminatedEnvironmentName


class TokenKind(enum.Enum):
    COMMAND = "Command"
    LETTER = "Letter"
    DIGIT = "Digit"
    OPERATOR = "OperatorSymbol"
    OPEN_GROUP = "OpenGroup"
    CLOSE_GROUP = "CloseGroup"
    SUPERSCRIPT = "Superscript"
    SUBSCRIPT = "Subscript"
    AMPERSAND = "Ampersand"
    ROW_BREAK = "RowBreak"
    ENV_BEGIN = "EnvBegin"
    ENV_END = "EnvEnd"
    WHITESPACE = "Whitespace"


_SINGLE = {
    "{": TokenKind.OPEN_GROUP,
    "}": TokenKind.CLOSE_GROUP,
    "^": TokenKind.SUPERSCRIPT,
    "_": TokenKind.SUBSCRIPT,
    "&": TokenKind.AMPERSAND,
}


class Token(NamedTuple):
    kind: TokenKind
    text: str
    position: int
    # command name without the backslash, or environment name
    name: str = ""

    @property
    def key(self) -> str:
        """Whitespace-free identity used for matching, BLEU and vocabularies."""
        if self.kind is TokenKind.ENV_BEGIN:
            return "\\begin{" + self.name + "}"
        if self.kind is TokenKind.ENV_END:
            return "\\end{" + self.name + "}"
        return self.text

    def __repr__(self):
        label = self.name if self.name else self.text
        return f"{self.kind.value} {label!r}@{self.position}"


TokenStream = List[Token]


def _is_ascii_letter(ch: str) -> bool:
    return ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _read_env_name(source: str, start: int, cmd_pos: int):
    """Read ``{name}`` after ``\\begin``/``\\end``; return (name, end_index)."""
    i = start
    n = len(source)
    while i < n and source[i].isspace():
        i += 1
    if i >= n or source[i] != "{":
        raise UnterminatedEnvironmentName(cmd_pos)
    close = source.find("}", i + 1)
    if close < 0:
        raise UnterminatedEnvironmentName(cmd_pos)
    name = source[i + 1 : close]
    if not name or not all(_is_ascii_letter(c) or c == "*" for c in name):
        raise UnterminatedEnvironmentName(cmd_pos)
    return name, close + 1


_SCANNER = re.compile(
    r"""
    (?P<rowbreak>\\\\)
    | \\(?P<env>begin|end)(?![A-Za-z])
    | (?P<cmd>\\[A-Za-z]+)
    | (?P<sym>\\.)
    | (?P<ws>\s+)
    | (?P<char>.)
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(source: str) -> TokenStream:
    """Split ``source`` into tokens whose texts concatenate back to ``source``.

    Unknown commands are ordinary ``Command`` tokens. Raises
    :class:`IncompleteEscape` for a trailing lone backslash and
    :class:`UnterminatedEnvironmentName` for a malformed ``\\begin``/``\\end``.
    """
    tokens: TokenStream = []
    append = tokens.append
    i = 0
    n = len(source)
    match = _SCANNER.match
    while i < n:
        m = match(source, i)
        group = m.lastgroup
        if group == "char":
            ch = m.group()
            if ch == "\\":
                raise IncompleteEscape(i)
            kind = _SINGLE.get(ch)
            if kind is None:
                if "0" <= ch <= "9":
                    kind = TokenKind.DIGIT
                elif ch.isalpha():
                    kind = TokenKind.LETTER
                else:
                    kind = TokenKind.OPERATOR
            append(Token(kind, ch, i))
            i += 1
            continue
        j = m.end()
        if group == "cmd":
            append(Token(TokenKind.COMMAND, m.group(), i, m.group()[1:]))
        elif group == "ws":
            append(Token(TokenKind.WHITESPACE, m.group(), i))
        elif group == "sym":
            append(Token(TokenKind.COMMAND, m.group(), i, m.group()[1]))
        elif group == "rowbreak":
            append(Token(TokenKind.ROW_BREAK, "\\\\", i))
        else:
            env, j = _read_env_name(source, j, i)
            kind = TokenKind.ENV_BEGIN if m.group("env") == "begin" else TokenKind.ENV_END
            append(Token(kind, source[i:j], i, env))
        i = j
    return tokens


def significant(tokens: TokenStream) -> TokenStream:
    """Drop whitespace tokens."""
    return [t for t in tokens if t.kind is not TokenKind.WHITESPACE]


def join_tokens(tokens) -> str:
    """Concatenate tokens with the minimum spacing that re-lexes identically.

    A space is needed only after a letter-named command that is followed by
    an ASCII letter.
    """
    out = []
    prev = None
    for tok in tokens:
        text = tok.key
        if (
            prev is not None
            and prev.kind is TokenKind.COMMAND
            and _is_ascii_letter(prev.name[:1])
            and _is_ascii_letter(text[:1])
        ):
            out.append(" ")
        out.append(text)
        prev = tok
    return "".join(out)
