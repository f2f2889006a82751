"""Finite state machines compiled from local types."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Tuple

from .projection import End, LocalType, LRec, LVar, OfferChoice, Recv, SelectChoice, Send

SEND = "send"
RECEIVE = "receive"

_PY_TYPES = {"int": int, "string": str}


@dataclass(frozen=True)
class Action:
    direction: str  # "send" | "receive"
    peer: str
    label: str
    sorts: Tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.sorts)

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.direction, self.peer, self.label, len(self.sorts))

    def __str__(self) -> str:
        mark = "!" if self.direction == SEND else "?"
        return f"{self.peer}{mark}{self.label}({','.join(self.sorts)})"

    def to_json(self) -> dict:
        return {"dir": self.direction, "peer": self.peer, "label": self.label, "sorts": list(self.sorts)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Action":
        direction = obj["dir"]
        if direction not in (SEND, RECEIVE):
            raise ValueError(f"bad direction {direction!r}")
        return cls(direction, str(obj["peer"]), str(obj["label"]), tuple(obj.get("sorts", ())))


def send(peer: str, label: str, *sorts: str) -> Action:
    return Action(SEND, peer, label, sorts)


def recv(peer: str, label: str, *sorts: str) -> Action:
    return Action(RECEIVE, peer, label, sorts)


@dataclass(frozen=True)
class Transition:
    src: int
    action: Action
    dst: int


@dataclass(frozen=True)
class Fsm:
    states: Tuple[int, ...]
    initial: int
    finals: frozenset
    transitions: Tuple[Transition, ...]
    _out: dict = field(init=False, repr=False, compare=False)
    _by_key: dict = field(init=False, repr=False, compare=False)
    _fast: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        out: dict[int, list[Transition]] = {s: [] for s in self.states}
        by_key: dict[tuple, Transition] = {}
        for t in self.transitions:
            out[t.src].append(t)
            k = (t.src,) + t.action.key
            if k in by_key:
                raise ValueError(f"nondeterministic FSM: state {t.src} has two {t.action} edges")
            by_key[k] = t
        object.__setattr__(self, "_out", {s: tuple(ts) for s, ts in out.items()})
        object.__setattr__(self, "_by_key", by_key)
        # key -> (dst, python types of the payload) for payload-level checking
        fast = {}
        for k, t in by_key.items():
            types = tuple(_PY_TYPES.get(x) for x in t.action.sorts)
            fast[k] = (t.dst, None if None in types else types)
        object.__setattr__(self, "_fast", fast)

    def outgoing(self, state: int) -> Tuple[Transition, ...]:
        return self._out[state]

    def lookup(self, state: int, action: Action) -> Optional[Transition]:
        """Transition from ``state`` with the same key as ``action``, if any."""
        return self._by_key.get((state, action.direction, action.peer, action.label, len(action.sorts)))

    def to_json(self) -> dict:
        return {
            "states": list(self.states),
            "initial": self.initial,
            "finals": sorted(self.finals),
            "transitions": [
                {
                    "from": t.src,
                    "dir": t.action.direction,
                    "peer": t.action.peer,
                    "label": t.action.label,
                    "sorts": list(t.action.sorts),
                    "to": t.dst,
                }
                for t in self.transitions
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Fsm":
        transitions = tuple(
            Transition(int(t["from"]), Action.from_json(t), int(t["to"]))
            for t in obj["transitions"]
        )
        states = tuple(int(s) for s in obj["states"])
        initial = int(obj["initial"])
        finals = frozenset(int(s) for s in obj["finals"])
        known = set(states)
        if initial not in known or not finals <= known:
            raise ValueError("initial/final states must be listed in states")
        if any(t.src not in known or t.dst not in known for t in transitions):
            raise ValueError("transition endpoint not in states")
        return cls(states, initial, finals, transitions)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


class _Builder:
    def __init__(self):
        self.next_id = 0
        self.finals: set[int] = set()
        self.transitions: list[Transition] = []

    def fresh(self) -> int:
        s = self.next_id
        self.next_id += 1
        return s

    def build(self, lt: LocalType, env: dict[str, int], target: Optional[int] = None) -> int:
        if isinstance(lt, LVar):
            if lt.var not in env:
                raise ValueError(f"free recursion variable {lt.var}")
            if target is not None:
                raise ValueError(f"unguarded recursion on {lt.var}")
            return env[lt.var]
        s = self.fresh() if target is None else target
        if isinstance(lt, End):
            self.finals.add(s)
        elif isinstance(lt, LRec):
            self.build(lt.body, {**env, lt.var: s}, target=s)
        elif isinstance(lt, Send):
            self._edge(s, Action(SEND, lt.peer, lt.sig.label, lt.sig.sorts), lt.cont, env)
        elif isinstance(lt, Recv):
            self._edge(s, Action(RECEIVE, lt.peer, lt.sig.label, lt.sig.sorts), lt.cont, env)
        elif isinstance(lt, SelectChoice):
            for peer, sig, cont in lt.branches:
                self._edge(s, Action(SEND, peer, sig.label, sig.sorts), cont, env)
        elif isinstance(lt, OfferChoice):
            for sig, cont in lt.branches:
                self._edge(s, Action(RECEIVE, lt.peer, sig.label, sig.sorts), cont, env)
        else:  # pragma: no cover
            raise TypeError(f"not a local type: {lt!r}")
        return s

    def _edge(self, s: int, action: Action, cont: LocalType, env: dict[str, int]) -> None:
        t = Transition(s, action, -1)
        self.transitions.append(t)
        idx = len(self.transitions) - 1
        dst = self.build(cont, env)
        self.transitions[idx] = Transition(s, action, dst)


def build_fsm(lt: LocalType) -> Fsm:
    """Compile a closed local type; recursion becomes a back edge.

    States are numbered in pre-order of the term, so the initial state is 0.
    """
    b = _Builder()
    initial = b.build(lt, {})
    fsm = Fsm(tuple(range(b.next_id)), initial, frozenset(b.finals), tuple(b.transitions))
    for s in fsm.states:
        dirs = {t.action.direction for t in fsm.outgoing(s)}
        if len(dirs) > 1:
            raise ValueError(f"mixed send/receive state {s}")
    return fsm


@dataclass(frozen=True)
class TraceResult:
    accepted: bool
    index: Optional[int] = None  # first rejected action
    state: Optional[int] = None  # state reached (or stuck at)


def fsm_accepts(fsm: Fsm, trace: Sequence[Action]) -> TraceResult:
    """Prefix acceptance: a trace is accepted iff every action has a transition."""
    state = fsm.initial
    for i, action in enumerate(trace):
        t = fsm.lookup(state, action)
        if t is None or t.action.sorts != action.sorts:
            return TraceResult(False, i, state)
        state = t.dst
    return TraceResult(True, None, state)


def reachable(fsm: Fsm) -> set[int]:
    seen = {fsm.initial}
    todo = deque([fsm.initial])
    while todo:
        s = todo.popleft()
        for t in fsm.outgoing(s):
            if t.dst not in seen:
                seen.add(t.dst)
                todo.append(t.dst)
    return seen


def emit_dot(fsm: Fsm, name: str = "fsm") -> str:
    lines = [f'digraph "{name}" {{', "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s in fsm.states:
        shape = "doublecircle" if s in fsm.finals else "circle"
        lines.append(f'  s{s} [shape={shape}, label="s{s}"];')
    lines.append(f"  __start -> s{fsm.initial};")
    for t in fsm.transitions:
        mark = "!" if t.action.direction == SEND else "?"
        lines.append(f'  s{t.src} -> s{t.dst} [label="{t.action.peer}{mark}{t.action.label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def explore_sync(fsms: Mapping[str, Fsm]) -> tuple[set[tuple[int, ...]], set[tuple[int, ...]]]:
    """Exhaustively explore the synchronous product of role FSMs.

    A send ``p -> q: l`` fires together with the matching receive at ``q``.
    Returns (reachable joint states, stuck joint states), where a stuck
    state is one with no enabled synchronisation that is not all-final.
    """
    roles = list(fsms)
    index = {r: i for i, r in enumerate(roles)}
    start = tuple(fsms[r].initial for r in roles)
    seen = {start}
    stuck: set[tuple[int, ...]] = set()
    todo = deque([start])
    while todo:
        joint = todo.popleft()
        moves = []
        for r in roles:
            for t in fsms[r].outgoing(joint[index[r]]):
                a = t.action
                if a.direction != SEND or a.peer not in index:
                    continue
                q = a.peer
                dual = Action(RECEIVE, r, a.label, a.sorts)
                u = fsms[q].lookup(joint[index[q]], dual)
                if u is None or u.action.sorts != a.sorts:
                    continue
                nxt = list(joint)
                nxt[index[r]] = t.dst
                nxt[index[q]] = u.dst
                moves.append(tuple(nxt))
        if not moves and not all(joint[index[r]] in fsms[r].finals for r in roles):
            stuck.add(joint)
        for m in moves:
            if m not in seen:
                seen.add(m)
                todo.append(m)
    return seen, stuck


def alphabet(fsms: Iterable[Fsm]) -> list[Action]:
    seen: dict[Action, None] = {}
    for f in fsms:
        for t in f.transitions:
            seen.setdefault(t.action, None)
    return list(seen)
