"""In-process router with AMQP-style exchanges, queues and bindings.

Three exchange kinds are modelled: ``broadcast`` (copy to every binding),
``direct`` (copy to bindings whose key equals the routing key) and
``round_robin`` (exactly one binding per publish, cycling in bind order).
Exchange-to-exchange bindings forward the routing key unchanged.
"""

from __future__ import annotations

import itertools
import json
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional, Tuple, Union

BROADCAST = "broadcast"
ROUND_ROBIN = "round_robin"
DIRECT = "direct"
EXCHANGE_KINDS = (BROADCAST, ROUND_ROBIN, DIRECT)

JOIN = "join"
APP = "app"
CONTROL = "control"


class BrokerError(Exception):
    pass


@dataclass(frozen=True)
class Envelope:
    protocol: str
    session: str
    from_role: str
    to_role: str
    label: str
    payload: Tuple[Any, ...] = ()
    kind: str = APP
    seq: int = 0

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "session": self.session,
            "from": self.from_role,
            "to": self.to_role,
            "label": self.label,
            "payload": list(self.payload),
            "kind": self.kind,
            "seq": self.seq,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(", ", ": "))

    @classmethod
    def from_json(cls, obj: dict) -> "Envelope":
        return cls(
            obj["protocol"], obj["session"], obj["from"], obj["to"], obj["label"],
            tuple(obj["payload"]), obj["kind"], int(obj["seq"]),
        )


class Queue:
    def __init__(self, name: str, consumer: Any = None):
        self.name = name
        self.consumer = consumer
        self.buffer: deque[Envelope] = deque()
        self.delivered = 0
        self.consumed = 0
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"Queue({self.name!r}, {len(self.buffer)} pending)"

    def __len__(self) -> int:
        return len(self.buffer)

    def put(self, e: Envelope) -> None:
        with self._lock:
            self.buffer.append(e)
            self.delivered += 1


@dataclass
class Binding:
    key: str
    target: Union[Queue, "Exchange"]
    id: int = 0


@dataclass
class Exchange:
    name: str
    kind: str
    bindings: list[Binding] = field(default_factory=list)
    # one cursor per routing key; a single key degenerates to a plain cursor
    rr_cursor: dict[str, int] = field(default_factory=dict)
    deleted: bool = False

    def __repr__(self) -> str:
        return f"Exchange({self.name!r}, {self.kind}, {len(self.bindings)} bindings)"

    def keys(self) -> set[str]:
        return {b.key for b in self.bindings}


@dataclass(frozen=True)
class DeadLetter:
    exchange: str
    key: str
    envelope: Envelope


class Broker:
    def __init__(self):
        self.exchanges: dict[str, Exchange] = {}
        self.queues: dict[str, Queue] = {}
        self.dead_letters: list[DeadLetter] = []
        self._ids = itertools.count(1)
        self._lock = threading.RLock()

    def declare_exchange(self, name: str, kind: str) -> Exchange:
        if kind not in EXCHANGE_KINDS:
            raise BrokerError(f"unknown exchange kind {kind!r}")
        with self._lock:
            ex = self.exchanges.get(name)
            if ex is not None:
                if ex.kind != kind:
                    raise BrokerError(f"exchange {name!r} already declared as {ex.kind}")
                return ex
            ex = self.exchanges[name] = Exchange(name, kind)
            return ex

    def delete_exchange(self, name: str) -> None:
        with self._lock:
            ex = self.exchanges.pop(name, None)
            if ex is not None:
                ex.deleted = True
                for other in self.exchanges.values():
                    other.bindings = [b for b in other.bindings if b.target is not ex]

    def declare_queue(self, name: str, consumer: Any = None) -> Queue:
        with self._lock:
            q = self.queues.get(name)
            if q is None:
                q = self.queues[name] = Queue(name, consumer)
            elif consumer is not None and q.consumer not in (None, consumer):
                raise BrokerError(f"queue {name!r} already has a consumer")
            elif consumer is not None:
                q.consumer = consumer
            return q

    def bind(self, ex: Exchange, key: str, target: Union[Queue, Exchange]) -> Binding:
        with self._lock:
            if ex.deleted or self.exchanges.get(ex.name) is not ex:
                raise BrokerError(f"exchange {ex.name!r} does not exist")
            if isinstance(target, Exchange) and self.exchanges.get(target.name) is not target:
                raise BrokerError(f"exchange {target.name!r} does not exist")
            if isinstance(target, Queue) and self.queues.get(target.name) is not target:
                raise BrokerError(f"queue {target.name!r} does not exist")
            if ex.kind == DIRECT:
                if not key:
                    raise BrokerError("direct exchange bindings need a non-empty key")
                if any(b.key == key and b.target is target for b in ex.bindings):
                    raise BrokerError(f"duplicate binding {key!r} on {ex.name!r}")
            b = Binding(key, target, next(self._ids))
            ex.bindings.append(b)
            return b

    def unbind(self, ex: Exchange, binding: Binding) -> None:
        with self._lock:
            ex.bindings = [b for b in ex.bindings if b is not binding]

    def publish(self, ex: Exchange, key: str, e: Envelope) -> int:
        """Route ``e``; returns the number of queue deliveries.

        Zero deliveries records the envelope in ``dead_letters``.
        """
        with self._lock:
            if e.kind == APP and e.session not in self.exchanges:
                raise BrokerError(f"app envelope for unknown session {e.session!r}")
            n = self._route(ex, key, e, depth=0)
            if n == 0:
                self.dead_letters.append(DeadLetter(ex.name, key, e))
            return n

    def _route(self, ex: Exchange, key: str, e: Envelope, depth: int) -> int:
        if depth > 16:
            raise BrokerError("exchange binding cycle")
        if ex.kind == BROADCAST:
            targets = [b.target for b in ex.bindings]
        elif ex.kind == DIRECT:
            targets = [b.target for b in ex.bindings if b.key == key]
        else:
            if not ex.bindings:
                return 0
            i = ex.rr_cursor.get(key, 0) % len(ex.bindings)
            ex.rr_cursor[key] = i + 1
            targets = [ex.bindings[i].target]
        n = 0
        for t in targets:
            if isinstance(t, Queue):
                t.put(e)
                n += 1
            else:
                n += self._route(t, key, e, depth + 1)
        return n

    def consume(self, q: Queue, consumer: Any = None) -> Optional[Envelope]:
        if q.consumer is not None and consumer is not q.consumer:
            raise BrokerError(f"{consumer!r} is not the consumer of queue {q.name!r}")
        with q._lock:
            if not q.buffer:
                return None
            q.consumed += 1
            return q.buffer.popleft()
