"""Well-formedness and projectability checks for parsed protocols."""

from __future__ import annotations

import re

from .ast import Choice, Continue, Diagnostic, GlobalProtocol, Interaction, Rec, Transfer

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _diag(message: str, node=None, severity: str = "error") -> Diagnostic:
    loc = getattr(node, "loc", None) or (1, 1)
    return Diagnostic(severity, message, loc[0], loc[1])


def validate(p: GlobalProtocol) -> list[Diagnostic]:
    """Return every violated well-formedness rule; ``[]`` means valid.

    Also projects every role and compiles its FSM, so an empty result
    guarantees the runtime can monitor each role.
    """
    out: list[Diagnostic] = []
    if not _IDENT.match(p.name):
        out.append(_diag(f"bad protocol name {p.name!r}", p))
    if len(p.roles) < 2:
        out.append(_diag("a protocol needs at least two roles", p))
    seen: set[str] = set()
    for r in p.roles:
        if not _IDENT.match(r):
            out.append(_diag(f"bad role name {r!r}", p))
        if r in seen:
            out.append(_diag(f"duplicate role {r}", p))
        seen.add(r)
    _check_seq(p.body, set(p.roles), (), out)
    if not out:
        out.extend(_check_projectable(p))
    return out


def _check_seq(seq, roles: set[str], bound: tuple[str, ...], out: list[Diagnostic]) -> None:
    for k, item in enumerate(seq):
        if isinstance(item, Continue) and k != len(seq) - 1:
            out.append(_diag(f"unreachable interaction after continue {item.var}", seq[k + 1]))
        _check_item(item, roles, bound, out)


def _check_item(item: Interaction, roles: set[str], bound, out: list[Diagnostic]) -> None:
    if isinstance(item, Transfer):
        for r in (item.src,) + item.dsts:
            if r not in roles:
                out.append(_diag(f"undeclared role {r}", item))
        if item.src in item.dsts:
            out.append(_diag(f"role {item.src} sends to itself", item))
        if len(set(item.dsts)) != len(item.dsts):
            out.append(_diag("repeated receiver in transfer", item))
        if item.sig.label and not _IDENT.match(item.sig.label):
            out.append(_diag(f"bad label {item.sig.label!r}", item))
    elif isinstance(item, Continue):
        if item.var not in bound:
            out.append(_diag(f"unbound recursion variable {item.var}", item))
    elif isinstance(item, Rec):
        if not item.body or isinstance(item.body[0], Continue):
            out.append(_diag(f"unguarded recursion {item.var}", item))
        _check_seq(item.body, roles, bound + (item.var,), out)
    elif isinstance(item, Choice):
        if item.at not in roles:
            out.append(_diag(f"undeclared role {item.at}", item))
        if not item.branches:
            out.append(_diag("choice without branches", item))
        firsts: dict[str, dict[tuple[str, int], int]] = {}
        for k, branch in enumerate(item.branches):
            head = branch[0] if branch else None
            if not isinstance(head, Transfer) or head.src != item.at:
                out.append(_diag(f"choice branch must start at chooser {item.at}", head or item))
            else:
                for dst in head.dsts:
                    key = (head.sig.label, head.sig.arity)
                    prev = firsts.setdefault(dst, {})
                    if key in prev and prev[key] != k:
                        out.append(_diag(f"indistinguishable branch labels for receiver {dst}", head))
                    prev.setdefault(key, k)
            _check_seq(branch, roles, bound, out)
    else:  # pragma: no cover
        out.append(_diag(f"unknown interaction {item!r}"))


def _check_projectable(p: GlobalProtocol) -> list[Diagnostic]:
    from ..fsm import build_fsm
    from ..projection import ProjectionError, project_role

    out = []
    for r in p.roles:
        try:
            build_fsm(project_role(p, r))
        except (ProjectionError, ValueError) as exc:
            out.append(_diag(f"unprojectable for role {r}: {exc}", p))
    return out
