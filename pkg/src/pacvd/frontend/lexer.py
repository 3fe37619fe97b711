from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import accumulate
from typing import List


class ParseError(Exception):
    """Malformed input, with 1-based line/column and what was expected."""

    def __init__(self, message: str, line: int = 0, col: int = 0, path: str = "<input>"):
        self.message = message
        self.line = line
        self.col = col
        self.path = path
        super().__init__(f"{path}:{line}:{col}: {message}")


class EncodingError(ParseError):
    pass


KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool __inline __inline__ __restrict __const asm __asm __asm__""".split()
)

TYPE_KEYWORDS = frozenset(
    """auto char const double enum extern float inline int long register
    restrict short signed static struct typedef union unsigned void volatile
    _Bool __inline __inline__ __restrict __const""".split()
)

_PUNCT = sorted(
    """... <<= >>= -> ++ -- << >> <= >= == != && || += -= *= /= %= &= ^= |=
    { } ( ) [ ] ; , : ? . + - * / % & | ^ ! ~ < > =""".split(),
    key=len,
    reverse=True,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<ucomment>/\*)
  | (?P<num>(?:0[xX][0-9a-fA-F]+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)[uUlLfF]*)
  | (?P<id>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<str>L?"(?:[^"\\\n]|\\.)*")
  | (?P<chr>L?'(?:[^'\\\n]|\\.)+')
  | (?P<op>"""
    + "|".join(re.escape(p) for p in _PUNCT)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # id, kw, num, str, chr, op, eof
    text: str
    start: int  # character offset
    end: int
    line: int
    col: int

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.text in ops


def tokenize(text: str, path: str = "<input>") -> List[Token]:
    """Split ``text`` into tokens; comments and preprocessor lines are dropped."""
    tokens: List[Token] = []
    pos = 0
    line = 1
    line_start = 0
    at_line_start = True
    n = len(text)
    while pos < n:
        ch = text[pos]
        if at_line_start and ch == "#":
            # Inputs are expected to be pre-expanded; stray directives are skipped.
            end = pos
            while True:
                nl = text.find("\n", end)
                if nl == -1:
                    end = n
                    break
                if text[nl - 1] == "\\":
                    end = nl + 1
                    continue
                end = nl
                break
            segment = text[pos:end]
            if "\n" in segment:
                line += segment.count("\n")
                line_start = pos + segment.rfind("\n") + 1
            pos = end
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if ch in "\"'":
                raise ParseError("unterminated literal", line, pos - line_start + 1, path)
            raise ParseError(f"unexpected character {ch!r}", line, pos - line_start + 1, path)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
            at_line_start = True
        elif kind == "ucomment":
            raise ParseError("unterminated comment", line, pos - line_start + 1, path)
        elif kind in ("ws",):
            pass
        elif kind in ("lcomment", "bcomment"):
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = pos + value.rfind("\n") + 1
        else:
            if kind == "id" and value in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, value, pos, m.end(), line, pos - line_start + 1))
            at_line_start = False
        pos = m.end()
    tokens.append(Token("eof", "", n, n, line, n - line_start + 1))
    return tokens


def byte_offsets(text: str):
    """Map character offsets to UTF-8 byte offsets."""
    if text.isascii():
        return lambda i: i
    prefix = [0, *accumulate(len(c.encode("utf-8")) for c in text)]
    return lambda i: prefix[i]
