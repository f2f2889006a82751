"""The actor system: registration, discovery, monitored messaging, policy."""

from __future__ import annotations

import itertools
import json
import logging
import threading
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

from ..broker import (
    APP,
    BROADCAST,
    CONTROL,
    DIRECT,
    JOIN,
    ROUND_ROBIN,
    Broker,
    BrokerError,
    Envelope,
    Queue,
)
from ..fsm import RECEIVE, SEND, Action, Fsm, build_fsm
from ..monitor import ROLE_MISMATCH, STUCK_SESSION, Violation, create_monitor
from ..projection import LocalType, project_role
from ..scribble import GlobalProtocol, validate
from .actor import (
    SELF,
    HandlerError,
    RegistrationError,
    RoleContext,
    SessionActor,
    SessionEnded,
    SessionError,
)

log = logging.getLogger(__name__)

HALT = "halt"
DROP = "drop"
LOG_ONLY = "log"
POLICIES = (HALT, DROP, LOG_ONLY)

COORDINATOR_KEY = "@coordinator"


class JoinError(SessionError):
    pass


@dataclass
class RuntimeConfig:
    policy: str = HALT
    join_timeout_ms: int = 5000
    monitoring: bool = True
    seed: int = 0
    parallel: bool = False
    workers: int = 4

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")


@dataclass
class Registration:
    actor_type: type
    protocol: GlobalProtocol
    role: str
    slot: str
    local: LocalType
    fsm: Fsm


@dataclass
class Session:
    id: str
    protocol: GlobalProtocol
    policy: str
    deadline: float
    acked: set = field(default_factory=set)
    contexts: dict = field(default_factory=dict)  # role -> RoleContext
    started: bool = False
    ended: bool = False
    end_reason: Optional[str] = None
    in_flight: int = 0
    stuck_reported: bool = False

    @property
    def roles(self) -> tuple[str, ...]:
        return self.protocol.roles

    def complete(self) -> bool:
        return len(self.contexts) == len(self.roles) and all(
            c.monitor.is_complete() for c in self.contexts.values()
        )


def sort_of(value: Any) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, str):
        return "string"
    return type(value).__name__


_SORT_BY_TYPE = {int: "int", str: "string"}


def sorts_of(payload: Sequence[Any]) -> tuple[str, ...]:
    if not payload:
        return ()
    get = _SORT_BY_TYPE.get
    return tuple([get(type(v)) or sort_of(v) for v in payload])


class _Coordinator:
    """Collects join-acks and releases session-start once every role is bound."""

    def __init__(self, system: "ActorSystem"):
        self.system = system
        self.id = "coordinator"
        self.queue = system.broker.declare_queue("coordinator", consumer=self)

    def has_work(self) -> bool:
        return bool(self.queue.buffer)

    def dispatch(self) -> int:
        env = self.system.broker.consume(self.queue, self)
        if env is None:
            return 0
        self.system._on_ack(env)
        return 1


class PolicyActor:
    """Receives every Violation and applies the session's configured response."""

    def __init__(self, system: "ActorSystem"):
        self.system = system
        self.id = "policy"
        self.mailbox: deque[Union[Violation, str]] = deque()
        self.log: list[dict] = []
        self.warnings: list[str] = []
        self._lock = threading.Lock()

    def post(self, item: Union[Violation, str]) -> None:
        with self._lock:
            self.mailbox.append(item)

    def has_work(self) -> bool:
        return bool(self.mailbox)

    def dispatch(self) -> int:
        with self._lock:
            if not self.mailbox:
                return 0
            item = self.mailbox.popleft()
        self.on_violation(item)
        return 1

    def on_violation(self, item: Union[Violation, str]) -> str:
        if isinstance(item, str):
            self.warnings.append(item)
            log.info("%s", item)
            return "warned"
        self.log.append(item.to_json())
        log.info("violation %s", item.dumps())
        policy = self.system.policy_for(item.session)
        if policy == HALT:
            self.system.end_session(item.session, "halted")
            return "halted"
        return "dropped" if policy == DROP else "logged"


class ActorSystem:
    def __init__(self, config: Optional[RuntimeConfig] = None, **overrides):
        if config is None:
            config = RuntimeConfig(**overrides)
        elif overrides:
            raise TypeError("pass either a config or keyword overrides")
        self.config = config
        self.broker = Broker()
        self.registrations: dict[tuple[str, str], Registration] = {}
        self.actors: list[SessionActor] = []
        self.sessions: dict[str, Session] = {}
        self.transcript: list[Envelope] = []
        self.faults: list[tuple[str, str, BaseException]] = []
        self.stats: Counter = Counter()
        self.monitoring = config.monitoring
        self._session_ids = itertools.count(1)
        self._actor_ids: Counter = Counter()
        self._lock = threading.RLock()
        self._seq = itertools.count(1)
        self.coordinator = _Coordinator(self)
        self.policy_actor = PolicyActor(self)
        self.processes: list = [self.coordinator, self.policy_actor]
        from .scheduler import make_scheduler

        self.scheduler = make_scheduler(self)

    # -- inspection ---------------------------------------------------------

    @property
    def dead_letters(self):
        return self.broker.dead_letters

    @property
    def violations(self) -> list[dict]:
        return self.policy_actor.log

    def policy_for(self, session: str) -> str:
        s = self.sessions.get(session)
        return s.policy if s is not None else self.config.policy

    def transcript_lines(self) -> list[str]:
        return [e.dumps() for e in self.transcript]

    def write_transcript(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(line + "\n" for line in self.transcript_lines())

    def write_policy_log(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(json.dumps(v) + "\n" for v in self.policy_actor.log)

    def run(self, max_turns: Optional[int] = None, detect_stuck: bool = True) -> int:
        """Run turns until quiescent (or ``max_turns``); returns turns taken."""
        return self.scheduler.run(max_turns=max_turns, detect_stuck=detect_stuck)

    # -- registration and spawning -----------------------------------------

    @staticmethod
    def protocol_exchange_name(proto: GlobalProtocol) -> str:
        return proto.name.lower()

    def register(self, actor_type: type) -> list[Registration]:
        """Register every ``@protocol`` declaration carried by ``actor_type``."""
        decls = getattr(actor_type, "__session_protocols__", ())
        if not decls:
            raise RegistrationError(f"{actor_type.__name__} declares no protocols")
        return [self.register_actor_type(actor_type, p, r, slot=s) for s, p, r in decls]

    def register_actor_type(
        self, actor_type: type, proto: GlobalProtocol, self_role: str, slot: Optional[str] = None
    ) -> Registration:
        slot = slot or proto.name
        if self_role not in proto.roles:
            raise RegistrationError(f"{self_role} is not a role of {proto.name}")
        errors = [d for d in validate(proto) if d.severity == "error"]
        if errors:
            raise RegistrationError(f"protocol {proto.name} is invalid: {errors[0]}")
        key = (proto.name, self_role)
        with self._lock:
            prev = self.registrations.get(key)
            if prev is not None:
                if prev.actor_type is actor_type and prev.protocol == proto:
                    return prev
                raise RegistrationError(
                    f"role {self_role} of {proto.name} is already played by {prev.actor_type.__name__}"
                )
            local = project_role(proto, self_role)
            fsm = build_fsm(local)
            self._check_coverage(actor_type, slot, self_role, fsm)
            reg = Registration(actor_type, proto, self_role, slot, local, fsm)
            pex = self.broker.declare_exchange(self.protocol_exchange_name(proto), BROADCAST)
            tex = self.broker.declare_exchange(actor_type.type_name(), ROUND_ROBIN)
            if not any(b.target is tex for b in pex.bindings):
                self.broker.bind(pex, "", tex)
            self.registrations[key] = reg
            return reg

    @staticmethod
    def _check_coverage(actor_type: type, slot: str, role: str, fsm: Fsm) -> None:
        handlers = getattr(actor_type, "__session_handlers__", {})
        receives = {(t.action.peer, t.action.label) for t in fsm.transitions if t.action.direction == RECEIVE}
        uncovered = sorted(
            label
            for peer, label in receives
            if handlers.get((slot, label), (None,))[0] not in (peer,)
        )
        if uncovered:
            raise RegistrationError(
                f"{actor_type.__name__} as {role}: no handler for received label(s) "
                + ", ".join(repr(x) for x in uncovered)
            )
        labels = {label for _, label in receives}
        stray = sorted(
            label
            for (s, label), (peer, _) in handlers.items()
            if s == slot and peer != SELF and label not in labels
        )
        if stray:
            raise RegistrationError(
                f"{actor_type.__name__} as {role}: handler(s) for label(s) never received: "
                + ", ".join(repr(x) for x in stray)
            )

    def spawn(self, actor_type: type, *args, **kwargs) -> SessionActor:
        actor = actor_type(*args, **kwargs)
        name = actor_type.type_name()
        with self._lock:
            self._actor_ids[name] += 1
            actor_id = f"{name}-{self._actor_ids[name]}"
            inbox = self.broker.declare_queue(actor_id, consumer=actor)
            actor._attach(self, actor_id, inbox)
            tex = self.broker.declare_exchange(name, ROUND_ROBIN)
            self.broker.bind(tex, "", inbox)
            self.actors.append(actor)
            self.processes.append(actor)
        return actor

    # -- sessions -----------------------------------------------------------

    def start_session(
        self,
        proto: GlobalProtocol,
        initiator: Optional[SessionActor] = None,
        role: Optional[str] = None,
        policy: Optional[str] = None,
    ) -> str:
        """Create a session and broadcast joins; returns the fresh session id.

        ``initiator``/``role`` let the starting actor claim a role directly.
        """
        policy = policy or self.config.policy
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        if role is not None and (initiator is None or role not in proto.roles):
            raise SessionError(f"cannot claim role {role!r} of {proto.name}")
        missing = [
            r for r in proto.roles if r != role and (proto.name, r) not in self.registrations
        ]
        if missing:
            raise SessionError(
                f"cannot start {proto.name}: no actor type registered for role(s) {', '.join(missing)}"
            )
        for r in proto.roles:
            reg = self.registrations.get((proto.name, r))
            if reg is not None and reg.protocol != proto:
                raise SessionError(f"{proto.name} is registered with a different definition")
        with self._lock:
            sid = f"s-{next(self._session_ids):03d}"
            ex = self.broker.declare_exchange(sid, DIRECT)
            self.broker.bind(ex, COORDINATOR_KEY, self.coordinator.queue)
            deadline = self.scheduler.clock() + self.config.join_timeout_ms / 1000.0
            sess = self.sessions[sid] = Session(sid, proto, policy, deadline)
            if role is not None:
                reg = self.registrations.get((proto.name, role))
                if reg is None or not isinstance(initiator, reg.actor_type):
                    reg = self._adhoc_registration(type(initiator), proto, role)
                self._make_context(initiator, sess, reg)
                sess.acked.add(role)
            pex = self.broker.declare_exchange(self.protocol_exchange_name(proto), BROADCAST)
            origin = role or ""
            for r in proto.roles:
                if r == role:
                    continue
                env = Envelope(proto.name, sid, origin, r, "join", (), JOIN, next(self._seq))
                self.broker.publish(pex, r, env)
            self.stats["sessions"] += 1
        return sid

    def _adhoc_registration(self, actor_type: type, proto: GlobalProtocol, role: str) -> Registration:
        """Registration for an initiator claiming a role its type was not registered for."""
        slot = next(
            (s for s, p, r in getattr(actor_type, "__session_protocols__", ()) if p == proto and r == role),
            proto.name,
        )
        local = project_role(proto, role)
        fsm = build_fsm(local)
        self._check_coverage(actor_type, slot, role, fsm)
        return Registration(actor_type, proto, role, slot, local, fsm)

    def _make_context(self, actor: SessionActor, sess: Session, reg: Registration) -> RoleContext:
        ex = self.broker.exchanges[sess.id]
        monitor = create_monitor(reg.fsm, sess.id, reg.role)
        peers = {r: (ex, r) for r in sess.roles if r != reg.role}
        ctx = RoleContext(actor, sess.id, sess.protocol.name, reg.slot, reg.role, monitor, ex, peers)
        self.broker.bind(ex, reg.role, actor.inbox)
        actor.contexts[(sess.id, reg.role)] = ctx
        sess.contexts[reg.role] = ctx
        return ctx

    def handle_join(self, actor: SessionActor, env: Envelope) -> Optional[RoleContext]:
        """Load the role's FSM into a new context and acknowledge the join.

        Returns None when ``actor``'s type does not play ``env.to_role``
        (joins are broadcast to every registered type of the protocol).
        """
        if env.kind != JOIN:
            raise JoinError(f"not a join envelope: {env.kind}")
        reg = self.registrations.get((env.protocol, env.to_role))
        if reg is None or not isinstance(actor, reg.actor_type):
            return None
        with self._lock:
            if (env.session, env.to_role) in actor.contexts:
                raise JoinError(f"duplicate join for {env.to_role} in {env.session}")
            sess = self.sessions.get(env.session)
            if sess is None or sess.ended:
                raise JoinError(f"join for unknown or ended session {env.session}")
            if env.to_role in sess.contexts:
                raise JoinError(f"role {env.to_role} of {env.session} is already taken")
            ctx = self._make_context(actor, sess, reg)
            ack = Envelope(env.protocol, env.session, env.to_role, COORDINATOR_KEY, "join-ack", (), CONTROL, actor.next_seq())
            self.broker.publish(ctx.exchange, COORDINATOR_KEY, ack)
        return ctx

    def _on_ack(self, env: Envelope) -> None:
        with self._lock:
            sess = self.sessions.get(env.session)
            if sess is None or sess.ended or env.label != "join-ack":
                return
            sess.acked.add(env.from_role)
            if sess.started or not set(sess.roles) <= sess.acked:
                return
            sess.started = True
            ex = self.broker.exchanges[sess.id]
            for r in sess.roles:
                start = Envelope(sess.protocol.name, sess.id, COORDINATOR_KEY, r, "session-start", (), CONTROL, next(self._seq))
                self.broker.publish(ex, r, start)

    def end_session(self, sid: str, reason: str) -> bool:
        """End ``sid``: contexts are dropped and the session exchange deleted."""
        with self._lock:
            sess = self.sessions.get(sid)
            if sess is None or sess.ended:
                return False
            sess.ended = True
            sess.end_reason = reason
            for ctx in sess.contexts.values():
                ctx.ended = True
                if reason != "completed":
                    ctx.monitor.frozen = True
                ctx.actor.contexts.pop((sid, ctx.role), None)
            self.broker.delete_exchange(sid)
            self.stats[f"sessions_{reason}"] += 1
            return True

    def _maybe_finish(self, sess: Optional[Session]) -> None:
        if sess is None or sess.ended or not sess.started or sess.in_flight:
            return
        with self._lock:
            if not sess.ended and sess.in_flight == 0 and sess.complete():
                self.end_session(sess.id, "completed")

    def _on_quiescent(self, now: float, detect_stuck: bool) -> bool:
        """Handle join timeouts and stuck sessions; True if new work appeared."""
        acted = False
        with self._lock:
            for sess in list(self.sessions.values()):
                if sess.ended:
                    continue
                if not sess.started:
                    if now >= sess.deadline:
                        self._abort(sess)
                        acted = True
                elif detect_stuck and self.monitoring and not sess.stuck_reported and sess.in_flight == 0 and not sess.complete():
                    sess.stuck_reported = True
                    waiting = sorted(r for r, c in sess.contexts.items() if not c.monitor.is_complete())
                    self.policy_actor.post(
                        Violation(
                            STUCK_SESSION, sess.id, ",".join(waiting), None, None,
                            f"session {sess.id} ({sess.protocol.name}) is quiescent with roles "
                            f"{', '.join(waiting)} not in a final state",
                        )
                    )
                    self.stats["violations"] += 1
                    acted = True
        return acted

    def _expire_barriers(self, now: float) -> bool:
        expired = [
            s for s in list(self.sessions.values())
            if not s.ended and not s.started and now >= s.deadline
        ]
        for sess in expired:
            with self._lock:
                if not sess.ended and not sess.started:
                    self._abort(sess)
        return bool(expired)

    def pending_deadline(self) -> Optional[float]:
        pending = [s.deadline for s in self.sessions.values() if not s.ended and not s.started]
        return min(pending) if pending else None

    def _abort(self, sess: Session) -> None:
        missing = sorted(set(sess.roles) - sess.acked)
        self.policy_actor.post(
            Violation(
                STUCK_SESSION, sess.id, ",".join(missing), None, None,
                f"join barrier of {sess.id} ({sess.protocol.name}) timed out; "
                f"no ack from role(s) {', '.join(missing)}",
            )
        )
        self.stats["violations"] += 1
        self.end_session(sess.id, "aborted")

    # -- messaging ----------------------------------------------------------

    def session_send(self, ctx: RoleContext, to: str, label: str, payload: Sequence[Any]) -> None:
        if ctx.ended:
            raise SessionEnded(f"session {ctx.session} has ended")
        if not ctx.started:
            raise SessionError(f"session {ctx.session} has not started yet")
        actor = ctx.actor
        if self.monitoring and actor.monitored:
            if to not in ctx.peers:
                action = Action(SEND, to, label, sorts_of(payload))
                v = Violation(
                    ROLE_MISMATCH, ctx.session, ctx.role, action, ctx.monitor.current,
                    f"{ctx.role} attempted {action}: {to} is not a role of {ctx.protocol}",
                )
            else:
                v = ctx.monitor.check(SEND, to, label, tuple(payload), sorts_of)
            if v is not None and not self._on_violation(ctx, v):
                return
        env = Envelope(ctx.protocol, ctx.session, ctx.role, to, label, tuple(payload), APP, actor.next_seq())
        sess = self.sessions[ctx.session]
        with self._lock:
            try:
                n = self.broker.publish(ctx.exchange, to, env)
            except BrokerError as exc:
                raise SessionEnded(str(exc)) from None
            sess.in_flight += n
            self.stats["sent"] += 1
        if n == 0:
            self.policy_actor.post(f"unroutable {label!r} from {ctx.role} to {to} in {ctx.session}")

    def _on_violation(self, ctx: RoleContext, v: Violation) -> bool:
        """Report ``v``; returns True if the message should still go through."""
        self.stats["violations"] += 1
        self.policy_actor.post(v)
        policy = self.policy_for(ctx.session)
        if policy == HALT:
            ctx.ended = True
            ctx.monitor.frozen = True
        return policy == LOG_ONLY

    def become(self, actor: SessionActor, ctx: RoleContext, label: str, payload: Sequence[Any]) -> None:
        if ctx.actor is not actor:
            raise HandlerError("become target context belongs to another actor")
        if (ctx.slot, label) not in type(actor).__session_handlers__:
            raise HandlerError(f"{type(actor).__name__} has no handler {label!r} in slot {ctx.slot!r}")
        actor.internal.append(
            Envelope(ctx.protocol, ctx.session, SELF, ctx.role, label, tuple(payload), CONTROL, actor.next_seq())
        )

    # -- dispatch -----------------------------------------------------------

    def dispatch(self, actor: SessionActor) -> int:
        """One turn: drain the internal queue, then at most one inbox envelope."""
        if actor.in_turn:
            raise RuntimeError(f"{actor.id} entered a turn while another was running")
        actor.in_turn = True
        try:
            n = 0
            while actor.internal:
                env = actor.internal.popleft()
                n += 1
                ctx = actor.contexts.get((env.session, env.to_role))
                if ctx is None or ctx.ended:
                    self.policy_actor.post(f"{actor.id}: become {env.label!r} for ended session {env.session}")
                    continue
                _, fn = type(actor).__session_handlers__[(ctx.slot, env.label)]
                self._invoke(actor, ctx, fn, env)
            env = self.broker.consume(actor.inbox, actor)
            if env is not None:
                n += 1
                if env.kind == APP:
                    self._on_app(actor, env)
                elif env.kind == JOIN:
                    try:
                        self.handle_join(actor, env)
                    except JoinError as exc:
                        self.policy_actor.post(f"{actor.id}: {exc}; join ignored")
                else:
                    self._on_control(actor, env)
            return n
        finally:
            actor.in_turn = False

    def _on_control(self, actor: SessionActor, env: Envelope) -> None:
        ctx = actor.contexts.get((env.session, env.to_role))
        if env.label != "session-start" or ctx is None:
            return
        ctx.started = True
        self._invoke(actor, ctx, type(actor).join, env)

    def _on_app(self, actor: SessionActor, env: Envelope) -> None:
        self.transcript.append(env)
        sess = self.sessions.get(env.session)
        if sess is not None:
            with self._lock:
                sess.in_flight -= 1
        ctx = actor.contexts.get((env.session, env.to_role))
        if ctx is None or ctx.ended:
            self.policy_actor.post(f"{actor.id}: dropped {env.label!r} for ended session {env.session}")
            return
        self.stats["received"] += 1
        if self.monitoring and actor.monitored:
            v = ctx.monitor.check(RECEIVE, env.from_role, env.label, env.payload, sorts_of)
            if v is not None and not self._on_violation(ctx, v):
                return
        entry = type(actor).__session_handlers__.get((ctx.slot, env.label))
        if entry is None:
            self.policy_actor.post(f"{actor.id}: no handler for {env.label!r}; message discarded")
        else:
            self._invoke(actor, ctx, entry[1], env)
        if ctx.monitor.current in ctx.monitor.fsm.finals:
            self._maybe_finish(sess)

    def _invoke(self, actor: SessionActor, ctx: RoleContext, fn: Callable, env: Envelope) -> None:
        args = () if env.kind == CONTROL and env.label == "session-start" else env.payload
        try:
            fn(actor, ctx, *args)
        except SessionEnded as exc:
            self.policy_actor.post(f"{actor.id}: send after session end ({exc})")
        except Exception as exc:  # handler faults are reported, never propagated
            log.exception("fault in %s handling %s", actor.id, env.label)
            self.faults.append((actor.id, env.label, exc))
