"""Runtime conformance checking of one (session, role) endpoint."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .fsm import Action, Fsm

LABEL_MISMATCH = "label-mismatch"
ROLE_MISMATCH = "role-mismatch"
DIRECTION_MISMATCH = "direction-mismatch"
ARITY_MISMATCH = "arity-mismatch"
NO_TRANSITION = "no-transition"
STUCK_SESSION = "stuck-session"

VIOLATION_KINDS = (
    LABEL_MISMATCH,
    ROLE_MISMATCH,
    DIRECTION_MISMATCH,
    ARITY_MISMATCH,
    NO_TRANSITION,
    STUCK_SESSION,
)


@dataclass(frozen=True)
class Violation:
    kind: str
    session: str
    role: str
    offending: Optional[Action]
    state: Optional[int]
    description: str

    def to_json(self) -> dict:
        a = self.offending
        action = (
            None
            if a is None
            else {"dir": a.direction, "peer": a.peer, "label": a.label, "arity": a.arity}
        )
        return {
            "kind": self.kind,
            "session": self.session,
            "role": self.role,
            "state": self.state,
            "action": action,
            "description": self.description,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=False)


def classify(fsm: Fsm, state: int, a: Action) -> Optional[str]:
    """Most specific violation kind for taking ``a`` at ``state``, or None if legal."""
    t = fsm.lookup(state, a)
    if t is not None:
        return None if t.action.sorts == a.sorts else ARITY_MISMATCH
    out = [t.action for t in fsm.outgoing(state)]
    if any(b.direction == a.direction and b.peer == a.peer and b.label == a.label for b in out):
        return ARITY_MISMATCH
    if any(b.direction == a.direction and b.peer == a.peer for b in out):
        return LABEL_MISMATCH
    same_label = [b for b in out if b.label == a.label]
    if any(b.direction == a.direction for b in same_label):
        return ROLE_MISMATCH
    if any(b.peer == a.peer for b in same_label):
        return DIRECTION_MISMATCH
    return NO_TRANSITION


class MonitorInstance:
    """Steps an FSM on every application message of one endpoint.

    Owned by a single actor; never touched concurrently.
    """

    __slots__ = ("fsm", "current", "session", "role", "step_count", "frozen", "_fast")

    def __init__(self, fsm: Fsm, session: str, role: str):
        self.fsm = fsm
        self._fast = fsm._fast
        self.current = fsm.initial
        self.session = session
        self.role = role
        self.step_count = 0
        # set when the session is halted; the runtime stops stepping frozen monitors
        self.frozen = False

    def __repr__(self) -> str:
        return f"MonitorInstance({self.session}/{self.role} at s{self.current}, steps={self.step_count})"

    def step(self, a: Action) -> Union[int, Violation]:
        """Advance on ``a``; returns the new state, or a Violation leaving state unchanged."""
        t = self.fsm._by_key.get((self.current, a.direction, a.peer, a.label, len(a.sorts)))
        if t is not None and t.action.sorts == a.sorts:
            self.current = t.dst
            self.step_count += 1
            return t.dst
        return self._violation(a)

    def check(
        self, direction: str, peer: str, label: str, payload: tuple, sorts_of: Callable
    ) -> Optional[Violation]:
        """Step on a concrete message; the runtime's allocation-free hot path.

        Payload values are checked by Python type against the transition's
        sorts; ``sorts_of`` is only called to describe a violation.
        """
        hit = self._fast.get((self.current, direction, peer, label, len(payload)))
        if hit is not None and (not payload or tuple(map(type, payload)) == hit[1]):
            self.current = hit[0]
            self.step_count += 1
            return None
        a = Action(direction, peer, label, sorts_of(payload))
        res = self.step(a)
        return res if isinstance(res, Violation) else None

    def _violation(self, a: Action) -> Violation:
        kind = classify(self.fsm, self.current, a)
        expected = ", ".join(str(t.action) for t in self.fsm.outgoing(self.current)) or "nothing"
        desc = f"{self.role} at s{self.current} attempted {a}; expected {expected}"
        return Violation(kind, self.session, self.role, a, self.current, desc)

    def is_complete(self) -> bool:
        return self.current in self.fsm.finals


def create_monitor(fsm: Fsm, session: str, role: str) -> MonitorInstance:
    return MonitorInstance(fsm, session, role)


def step(m: MonitorInstance, a: Action) -> Union[int, Violation]:
    return m.step(a)


def is_complete(m: MonitorInstance) -> bool:
    return m.is_complete()
