"""Parser for the clause file syntax: `pred(c1,c2).` facts and
`head(A) :- body1(A,B),body2(B).` definite rules, one clause per line,
`%` comments.  Uppercase-initial tokens are variables, everything else
is a constant symbol.
"""

from __future__ import annotations

import re

from .logic import Const, Literal, Rule, Term, Var

_TOKEN = re.compile(r"\s*(:-|[(),.]|[A-Za-z0-9_\[\]]+)")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


def tokenize(text: str, line: int | None = None) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}", line)
            break
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _Reader:
    def __init__(self, tokens: list[str], line: int | None = None):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of clause", self.line)
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", self.line)
        self.pos += 1
        return tok


def _is_var_token(tok: str) -> bool:
    return tok[0].isupper() or tok[0] == "_"


def _read_literal(reader: _Reader, varmap: dict[str, Var]) -> Literal:
    name = reader.take()
    if not re.fullmatch(r"[a-z0-9_\[\]][A-Za-z0-9_\[\]]*", name):
        raise ParseError(f"bad predicate name {name!r}", reader.line)
    args: list[Term] = []
    if reader.peek() == "(":
        reader.take("(")
        while True:
            tok = reader.take()
            if tok in {"(", ")", ",", ".", ":-"}:
                raise ParseError(f"expected a term, found {tok!r}", reader.line)
            if _is_var_token(tok):
                if tok not in varmap:
                    varmap[tok] = Var(len(varmap))
                args.append(varmap[tok])
            else:
                args.append(Const(tok))
            if reader.peek() == ")":
                reader.take(")")
                break
            reader.take(",")
    return Literal(name, tuple(args))


def parse_clause(text: str, line: int | None = None) -> Literal | Rule:
    """One clause; returns a ground Literal for facts, a Rule otherwise."""
    reader = _Reader(tokenize(text, line), line)
    varmap: dict[str, Var] = {}
    head = _read_literal(reader, varmap)
    if reader.peek() == ".":
        reader.take(".")
        if reader.peek() is not None:
            raise ParseError("trailing tokens after clause", line)
        if varmap:
            raise ParseError("facts must be ground", line)
        return head
    reader.take(":-")
    body = []
    while True:
        body.append(_read_literal(reader, varmap))
        if reader.peek() == ".":
            reader.take(".")
            break
        reader.take(",")
    if reader.peek() is not None:
        raise ParseError("trailing tokens after clause", line)
    return Rule(head, frozenset(body))


def strip_comment(line: str) -> str:
    cut = line.find("%")
    return line if cut < 0 else line[:cut]


def parse_clauses(text: str) -> list[Literal | Rule]:
    """All clauses in a file body, one per line."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = strip_comment(raw).strip()
        if not stripped:
            continue
        out.append(parse_clause(stripped, lineno))
    return out
