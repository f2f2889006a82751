"""Recursive-descent parser for the Scribble subset.

Grammar::

    protocol    := 'global' 'protocol' IDENT '(' roledecl (',' roledecl)* ')' block
    roledecl    := 'role' IDENT
    block       := '{' interaction* '}'
    interaction := transfer | choice | rec | continue
    transfer    := IDENT? '(' [item (',' item)*] ')' 'from' IDENT 'to' IDENT (',' IDENT)* ';'
    item        := SORT [':' IDENT]
    choice      := 'choice' 'at' IDENT block ('or' block)*
    rec         := 'rec' IDENT block
    continue    := 'continue' IDENT ';'
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    SORTS,
    Choice,
    Continue,
    Diagnostic,
    GlobalProtocol,
    Interaction,
    MessageSignature,
    PayloadItem,
    ProtocolError,
    Rec,
    Transfer,
)

KEYWORDS = frozenset(
    {"global", "protocol", "role", "from", "to", "choice", "at", "or", "rec", "continue"}
)
UNSUPPORTED = frozenset({"parallel", "interrupt", "interruptible", "do", "and"})

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<comment>//[^\n]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[(){},;:])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | punct | eof
    text: str
    line: int
    column: int


class _Fail(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise _Fail(Diagnostic("error", f"unexpected character {source[pos]!r}", line, col))
        kind = m.lastgroup
        text = m.group()
        if kind in ("ident", "punct"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0
        self.scope_errors: list[Diagnostic] = []

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise _Fail(Diagnostic("error", message, tok.line, tok.column))

    def describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def expect(self, text: str) -> Token:
        tok = self.tok
        if tok.text != text or tok.kind == "eof":
            self.fail(f"expected {text!r}, found {self.describe(tok)}")
        self.i += 1
        return tok

    def ident(self, what: str) -> Token:
        tok = self.tok
        if tok.kind != "ident":
            self.fail(f"expected {what}, found {self.describe(tok)}")
        if tok.text in UNSUPPORTED:
            self.fail(f"unsupported construct {tok.text!r}")
        if tok.text in KEYWORDS:
            self.fail(f"expected {what}, found keyword {tok.text!r}")
        self.i += 1
        return tok

    # -- grammar -----------------------------------------------------------

    def protocol(self) -> GlobalProtocol:
        start = self.tok
        if start.kind == "ident" and start.text in UNSUPPORTED:
            self.fail(f"unsupported construct {start.text!r}")
        self.expect("global")
        self.expect("protocol")
        name = self.ident("protocol name").text
        self.expect("(")
        roles = [self.roledecl()]
        while self.tok.text == ",":
            self.i += 1
            roles.append(self.roledecl())
        self.expect(")")
        body = self.block(bound=())
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.describe(self.tok)} after protocol body")
        return GlobalProtocol(name, tuple(roles), body, loc=(start.line, start.column))

    def roledecl(self) -> str:
        self.expect("role")
        return self.ident("role name").text

    def block(self, bound: tuple[str, ...]) -> tuple[Interaction, ...]:
        self.expect("{")
        items: list[Interaction] = []
        while self.tok.text != "}" or self.tok.kind == "eof":
            if self.tok.kind == "eof":
                self.fail("expected '}', found end of input")
            items.append(self.interaction(bound))
        self.i += 1
        return tuple(items)

    def interaction(self, bound: tuple[str, ...]) -> Interaction:
        tok = self.tok
        if tok.kind == "ident" and tok.text in UNSUPPORTED:
            self.fail(f"unsupported construct {tok.text!r}")
        if tok.text == "choice" and tok.kind == "ident":
            return self.choice(bound)
        if tok.text == "rec" and tok.kind == "ident":
            return self.rec(bound)
        if tok.text == "continue" and tok.kind == "ident":
            return self.cont(bound)
        if tok.kind == "ident" or tok.text == "(":
            return self.transfer()
        self.fail(f"expected an interaction, found {self.describe(tok)}")

    def transfer(self) -> Transfer:
        start = self.tok
        label = ""
        if self.tok.kind == "ident":
            label = self.ident("message label").text
        self.expect("(")
        items: list[PayloadItem] = []
        if self.tok.text != ")":
            items.append(self.item())
            while self.tok.text == ",":
                self.i += 1
                items.append(self.item())
        self.expect(")")
        self.expect("from")
        src = self.ident("sender role").text
        self.expect("to")
        dsts = [self.ident("receiver role").text]
        while self.tok.text == ",":
            self.i += 1
            dsts.append(self.ident("receiver role").text)
        self.expect(";")
        sig = MessageSignature(label, tuple(items))
        return Transfer(sig, src, tuple(dsts), loc=(start.line, start.column))

    def item(self) -> PayloadItem:
        tok = self.tok
        if tok.kind != "ident" or tok.text not in SORTS:
            self.fail(f"unknown payload sort {self.describe(tok)}")
        self.i += 1
        name = None
        if self.tok.text == ":":
            self.i += 1
            name = self.ident("payload name").text
        return PayloadItem(tok.text, name)

    def choice(self, bound: tuple[str, ...]) -> Choice:
        start = self.expect("choice")
        self.expect("at")
        at = self.ident("chooser role").text
        branches = [self.block(bound)]
        while self.tok.text == "or" and self.tok.kind == "ident":
            self.i += 1
            branches.append(self.block(bound))
        return Choice(at, tuple(branches), loc=(start.line, start.column))

    def rec(self, bound: tuple[str, ...]) -> Rec:
        start = self.expect("rec")
        var = self.ident("recursion variable").text
        body = self.block(bound + (var,))
        return Rec(var, body, loc=(start.line, start.column))

    def cont(self, bound: tuple[str, ...]) -> Continue:
        start = self.expect("continue")
        var_tok = self.ident("recursion variable")
        self.expect(";")
        if var_tok.text not in bound:
            self.scope_errors.append(
                Diagnostic(
                    "error",
                    f"unbound recursion variable {var_tok.text}",
                    var_tok.line,
                    var_tok.column,
                )
            )
        return Continue(var_tok.text, loc=(start.line, start.column))


def parse_global(source: str) -> GlobalProtocol:
    """Parse one global protocol.

    Raises :class:`ProtocolError` carrying located diagnostics on any
    syntax or scoping error; a partial tree is never returned.
    """
    try:
        parser = _Parser(tokenize(source))
        proto = parser.protocol()
    except _Fail as exc:
        raise ProtocolError([exc.diag]) from None
    if parser.scope_errors:
        raise ProtocolError(parser.scope_errors)
    return proto


def parse_file(path) -> GlobalProtocol:
    with open(path, encoding="utf-8") as fh:
        return parse_global(fh.read())
