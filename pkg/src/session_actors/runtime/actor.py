"""Session actor base class, role contexts and the annotation decorators."""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING, Any, Callable, Optional

from ..broker import Envelope, Exchange, Queue
from ..monitor import MonitorInstance
from ..scribble import GlobalProtocol

if TYPE_CHECKING:  # pragma: no cover
    from .system import ActorSystem

SELF = "self"


class SessionError(Exception):
    pass


class SessionEnded(SessionError):
    pass


class RegistrationError(Exception):
    pass


class HandlerError(Exception):
    pass


def protocol(slot: str, proto: GlobalProtocol, self_role: str):
    """Class decorator registering the actor type for ``self_role`` of ``proto``.

    Handlers for that session refer to it through ``slot``.
    """

    def deco(cls):
        decls = list(cls.__dict__.get("__session_protocols__", ()))
        decls.insert(0, (slot, proto, self_role))
        cls.__session_protocols__ = tuple(decls)
        return cls

    return deco


def role(slot: str, peer: str, label: Optional[str] = None):
    """Mark a method as the handler for ``label`` received from ``peer`` in ``slot``.

    ``peer="self"`` marks an internally triggered handler reachable only via
    :meth:`SessionActor.become`. ``label`` defaults to the method name; pass
    ``label=""`` for empty-label messages.
    """

    def deco(fn: Callable) -> Callable:
        fn.__session_role__ = (slot, peer, fn.__name__ if label is None else label)
        return fn

    return deco


class RoleContext:
    """One role played by one actor in one session."""

    def __init__(
        self,
        actor: "SessionActor",
        session: str,
        protocol: str,
        slot: str,
        role: str,
        monitor: MonitorInstance,
        exchange: Exchange,
        peers: dict[str, tuple[Exchange, str]],
    ):
        self.actor = actor
        self.session = session
        self.protocol = protocol
        self.slot = slot
        self.role = role
        self.monitor = monitor
        self.exchange = exchange
        self.peers = peers
        self.started = False
        self.ended = False

    def __repr__(self) -> str:
        state = "ended" if self.ended else ("live" if self.started else "joining")
        return f"<RoleContext {self.protocol}/{self.session} as {self.role} ({state})>"

    def send(self, to: str, label: str, *payload: Any) -> None:
        self.actor.system.session_send(self, to, label, payload)


class SessionActor:
    """Base class for actors that take part in sessions.

    Subclasses annotate themselves with :func:`protocol` and their handlers
    with :func:`role`. Handlers are called as ``handler(self, ctx, *payload)``.
    """

    # rogue actors in fault-injection tests turn their own checking off
    monitored = True

    system: "ActorSystem"
    id: str
    inbox: Queue

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        handlers: dict[tuple[str, str], tuple[str, Callable]] = {}
        for klass in reversed(cls.__mro__):
            for attr in vars(klass).values():
                spec = getattr(attr, "__session_role__", None)
                if spec is not None:
                    slot, peer, label = spec
                    handlers[(slot, label)] = (peer, attr)
        cls.__session_handlers__ = handlers

    @classmethod
    def type_name(cls) -> str:
        return cls.__name__.lower()

    def _attach(self, system: "ActorSystem", actor_id: str, inbox: Queue) -> None:
        self.system = system
        self.id = actor_id
        self.inbox = inbox
        self.internal: deque[Envelope] = deque()
        self.contexts: dict[tuple[str, str], RoleContext] = {}
        self.seq = 0
        self.in_turn = False

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {getattr(self, 'id', '?')}>"

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def has_work(self) -> bool:
        return bool(self.internal) or bool(self.inbox.buffer)

    def dispatch(self) -> int:
        return self.system.dispatch(self)

    # -- user-facing helpers ------------------------------------------------

    def join(self, ctx: RoleContext) -> None:
        """Hook run once the session has started; override as needed."""

    def context(self, slot: str) -> Optional[RoleContext]:
        """The most recent live context for ``slot``, if any."""
        live = [c for c in self.contexts.values() if c.slot == slot and not c.ended]
        return live[-1] if live else None

    def become(self, ctx: RoleContext, label: str, *payload: Any) -> None:
        self.system.become(self, ctx, label, payload)

    def start_session(self, proto: GlobalProtocol, role: Optional[str] = None, **kw) -> str:
        return self.system.start_session(proto, initiator=self if role else None, role=role, **kw)
