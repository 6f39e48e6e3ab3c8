"""Tokenizer for the scenario language.

Never raises on malformed input: bad bytes become diagnostics and scanning
continues, so the parser always sees a well-formed token stream ending in EOF.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass

from ..diagnostics import Diagnostic, SourceSpan, error

IDENT = "ident"
NUMBER = "number"
STRING = "string"
PUNCT = "punct"
EOF = "eof"

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>//[^\n]*|/\*.*?\*/)
    | (?P<number>-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>"(?:[^"\\]|\\.)*")
    | (?P<punct>&&|\|\||[{}(),;=.:!])
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPE_RE = re.compile(r"\\(.)", re.DOTALL)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    value: object  # float for numbers, unescaped str for strings, else text
    span: SourceSpan


class LineIndex:
    """Maps byte offsets to 1-based (line, column)."""

    def __init__(self, text: str):
        self.starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.starts.append(i + 1)

    def locate(self, offset: int) -> tuple[int, int]:
        line = bisect_right(self.starts, offset)
        return line, offset - self.starts[line - 1] + 1


def _unescape(body: str) -> str:
    # \" and \\ are escapes; any other backslash pair is kept literally.
    def sub(m: re.Match) -> str:
        c = m.group(1)
        if c in ('"', "\\"):
            return c
        return "\\" + c

    return _ESCAPE_RE.sub(sub, body)


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic], LineIndex]:
    index = LineIndex(text)
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    pos = 0
    n = len(text)

    def span_at(offset: int, length: int) -> SourceSpan:
        line, col = index.locate(offset)
        return SourceSpan(offset, line, col, length)

    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            ch = text[pos]
            if ch == '"':
                # Unterminated string: consume to end of line or input.
                end = text.find("\n", pos)
                end = n if end == -1 else end
                diags.append(error("E_SYNTAX", "unterminated string", span=span_at(pos, end - pos)))
                pos = end
            elif text.startswith("/*", pos):
                diags.append(error("E_SYNTAX", "unterminated block comment", span=span_at(pos, n - pos)))
                pos = n
            else:
                diags.append(error("E_SYNTAX", f"unexpected character {ch!r}", span=span_at(pos, 1)))
                pos += 1
            continue
        kind = m.lastgroup
        sp = span_at(m.start(), m.end() - m.start())
        if kind == "number":
            try:
                value = float(m.group())
            except ValueError:
                diags.append(error("E_SYNTAX", f"bad number {m.group()!r}", span=sp))
                value = 0.0
            tokens.append(Token(NUMBER, m.group(), value, sp))
        elif kind == "ident":
            tokens.append(Token(IDENT, m.group(), m.group(), sp))
        elif kind == "string":
            tokens.append(Token(STRING, m.group(), _unescape(m.group()[1:-1]), sp))
        elif kind == "punct":
            tokens.append(Token(PUNCT, m.group(), m.group(), sp))
        pos = m.end()

    tokens.append(Token(EOF, "", None, span_at(n, 0)))
    return tokens, diags, index
