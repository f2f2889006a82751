"""Global protocol syntax tree for the supported Scribble subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

SORTS = frozenset({"string", "int"})

Loc = Optional[Tuple[int, int]]


@dataclass(frozen=True)
class PayloadItem:
    sort: str
    # names are documentation only and never take part in equality
    name: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class MessageSignature:
    label: str
    payload: Tuple[PayloadItem, ...] = ()

    @property
    def sorts(self) -> Tuple[str, ...]:
        return tuple(p.sort for p in self.payload)

    @property
    def arity(self) -> int:
        return len(self.payload)

    def __str__(self) -> str:
        return f"{self.label}({','.join(self.sorts)})"


@dataclass(frozen=True)
class Transfer:
    sig: MessageSignature
    src: str
    dsts: Tuple[str, ...]
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Choice:
    at: str
    branches: Tuple[Tuple["Interaction", ...], ...]
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Rec:
    var: str
    body: Tuple["Interaction", ...]
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Continue:
    var: str
    loc: Loc = field(default=None, compare=False, repr=False)


Interaction = Union[Transfer, Choice, Rec, Continue]


@dataclass(frozen=True)
class GlobalProtocol:
    name: str
    roles: Tuple[str, ...]
    body: Tuple[Interaction, ...]
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line: int = 1
    column: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ProtocolError(Exception):
    """Raised when source text cannot be turned into a protocol."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


def roles_of(p: GlobalProtocol) -> list[str]:
    return list(p.roles)


def mentioned_roles(body: Tuple[Interaction, ...]) -> set[str]:
    out: set[str] = set()
    for item in body:
        if isinstance(item, Transfer):
            out.add(item.src)
            out.update(item.dsts)
        elif isinstance(item, Choice):
            out.add(item.at)
            for b in item.branches:
                out |= mentioned_roles(b)
        elif isinstance(item, Rec):
            out |= mentioned_roles(item.body)
    return out
