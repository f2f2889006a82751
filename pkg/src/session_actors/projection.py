"""Projection of global protocols onto roles, yielding local types.

Classical syntactic projection with plain merge: a role that does not
choose must either see identical behaviour in every branch, or be told
which branch was taken by a first message from a single peer whose
(label, arity) differs across branches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

from .scribble.ast import (
    Choice,
    Continue,
    GlobalProtocol,
    Interaction,
    MessageSignature,
    Rec,
    Transfer,
    mentioned_roles,
)
from .scribble.pretty import format_signature


class ProjectionError(ValueError):
    """The protocol cannot be projected onto the requested role."""


@dataclass(frozen=True)
class Send:
    peer: str
    sig: MessageSignature
    cont: "LocalType"


@dataclass(frozen=True)
class Recv:
    peer: str
    sig: MessageSignature
    cont: "LocalType"


@dataclass(frozen=True)
class SelectChoice:
    """The local role picks a branch; each branch starts with its own send."""

    branches: Tuple[Tuple[str, MessageSignature, "LocalType"], ...]


@dataclass(frozen=True)
class OfferChoice:
    peer: str
    branches: Tuple[Tuple[MessageSignature, "LocalType"], ...]


@dataclass(frozen=True)
class LRec:
    var: str
    body: "LocalType"


@dataclass(frozen=True)
class LVar:
    var: str


@dataclass(frozen=True)
class End:
    pass


END = End()

LocalType = Union[Send, Recv, SelectChoice, OfferChoice, LRec, LVar, End]


def project_role(p: GlobalProtocol, role: str) -> LocalType:
    if role not in p.roles:
        raise ProjectionError(f"role {role} is not declared in protocol {p.name}")
    return _project(tuple(p.body), role)


def _project(seq: Tuple[Interaction, ...], r: str) -> LocalType:
    if not seq:
        return END
    head, rest = seq[0], seq[1:]
    if isinstance(head, Transfer):
        if head.src == r:
            cont = _project(rest, r)
            for dst in reversed(head.dsts):
                cont = Send(dst, head.sig, cont)
            return cont
        if r in head.dsts:
            return Recv(head.src, head.sig, _project(rest, r))
        return _project(rest, r)
    if isinstance(head, Continue):
        return LVar(head.var)
    if isinstance(head, Rec):
        if r not in mentioned_roles(head.body):
            return _project(rest, r)
        body = _project(head.body + rest, r)
        if body == LVar(head.var):
            return END
        return LRec(head.var, body) if head.var in free_vars(body) else body
    if isinstance(head, Choice):
        locals_ = [_project(branch + rest, r) for branch in head.branches]
        if head.at == r:
            picks = []
            for lt in locals_:
                if not isinstance(lt, Send):
                    raise ProjectionError(
                        f"choice at {r}: every branch must start with a send by {r}"
                    )
                picks.append((lt.peer, lt.sig, lt.cont))
            keys = [(peer, sig.label, sig.arity) for peer, sig, _ in picks]
            if len(set(keys)) != len(keys):
                raise ProjectionError(f"choice at {r}: two branches start with the same message")
            return SelectChoice(tuple(picks))
        return _merge(locals_, r, head.at)
    raise TypeError(f"not an interaction: {head!r}")  # pragma: no cover


def _merge(locals_: list[LocalType], r: str, chooser: str) -> LocalType:
    first = locals_[0]
    if all(lt == first for lt in locals_):
        return first
    entries: list[tuple[str, MessageSignature, LocalType]] = []
    for lt in locals_:
        if isinstance(lt, Recv):
            entries.append((lt.peer, lt.sig, lt.cont))
        elif isinstance(lt, OfferChoice):
            entries.extend((lt.peer, sig, cont) for sig, cont in lt.branches)
        else:
            raise ProjectionError(
                f"unprojectable: role {r} cannot tell apart the branches of choice at {chooser}"
            )
    peers = {peer for peer, _, _ in entries}
    if len(peers) != 1:
        raise ProjectionError(
            f"unprojectable: role {r} learns the choice at {chooser} from several peers"
        )
    unique: list[tuple[str, MessageSignature, LocalType]] = []
    for e in entries:
        if e not in unique:
            unique.append(e)
    keys = [(sig.label, sig.arity) for _, sig, _ in unique]
    if len(set(keys)) != len(keys):
        raise ProjectionError(
            f"unprojectable: role {r} cannot distinguish branch messages of choice at {chooser}"
        )
    (peer,) = peers
    return OfferChoice(peer, tuple((sig, cont) for _, sig, cont in unique))


def free_vars(lt: LocalType) -> set[str]:
    if isinstance(lt, LVar):
        return {lt.var}
    if isinstance(lt, (Send, Recv)):
        return free_vars(lt.cont)
    if isinstance(lt, SelectChoice):
        return set().union(*(free_vars(c) for _, _, c in lt.branches))
    if isinstance(lt, OfferChoice):
        return set().union(*(free_vars(c) for _, c in lt.branches))
    if isinstance(lt, LRec):
        return free_vars(lt.body) - {lt.var}
    return set()


def format_local(lt: LocalType) -> str:
    """Compact one-line rendering, e.g. ``S?login(string) . B!auth(string) . end``."""
    if isinstance(lt, End):
        return "end"
    if isinstance(lt, LVar):
        return lt.var
    if isinstance(lt, Send):
        return f"{lt.peer}!{format_signature(lt.sig)} . {format_local(lt.cont)}"
    if isinstance(lt, Recv):
        return f"{lt.peer}?{format_signature(lt.sig)} . {format_local(lt.cont)}"
    if isinstance(lt, LRec):
        return f"rec {lt.var} . {format_local(lt.body)}"
    if isinstance(lt, SelectChoice):
        parts = [f"{p}!{format_signature(s)} . {format_local(c)}" for p, s, c in lt.branches]
        return "{ " + " ; ".join(parts) + " }"
    if isinstance(lt, OfferChoice):
        parts = [f"{lt.peer}?{format_signature(s)} . {format_local(c)}" for s, c in lt.branches]
        return "{ " + " ; ".join(parts) + " }"
    raise TypeError(f"not a local type: {lt!r}")  # pragma: no cover
