import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from session_actors.broker import (
    APP,
    BROADCAST,
    DIRECT,
    JOIN,
    ROUND_ROBIN,
    Broker,
    BrokerError,
    Envelope,
)


def env(label="m", session="s-001", kind=APP, seq=0, frm="B", to="S"):
    return Envelope("Purchase", session, frm, to, label, ("x",), kind, seq)


@pytest.fixture
def broker():
    b = Broker()
    b.declare_exchange("s-001", DIRECT)
    return b


def test_declare_is_idempotent_per_kind(broker):
    p = broker.declare_exchange("purchase", BROADCAST)
    assert broker.declare_exchange("purchase", BROADCAST) is p
    with pytest.raises(BrokerError):
        broker.declare_exchange("purchase", DIRECT)
    assert broker.declare_exchange("warehouse", ROUND_ROBIN).kind == ROUND_ROBIN


def test_direct_delivery_by_key(broker):
    ex = broker.exchanges["s-001"]
    buyer, seller = broker.declare_queue("buyer"), broker.declare_queue("seller")
    broker.bind(ex, "B", buyer)
    broker.bind(ex, "S", seller)
    assert broker.publish(ex, "B", env(to="B")) == 1
    assert len(buyer) == 1 and len(seller) == 0


def test_direct_binding_rules(broker):
    ex = broker.exchanges["s-001"]
    q = broker.declare_queue("q")
    with pytest.raises(BrokerError):
        broker.bind(ex, "", q)
    broker.bind(ex, "S", q)
    with pytest.raises(BrokerError):
        broker.bind(ex, "S", q)


def test_broadcast_through_type_exchanges(broker):
    proto = broker.declare_exchange("purchase", BROADCAST)
    counts = {}
    for name in ("warehouse", "customer"):
        tex = broker.declare_exchange(name, ROUND_ROBIN)
        broker.bind(proto, "", tex)
        counts[name] = broker.declare_queue(f"{name}-1")
        broker.bind(tex, "", counts[name])
    assert broker.publish(proto, "S", env("join", kind=JOIN)) == 2
    assert all(len(q) == 1 for q in counts.values())


def test_round_robin_alternates():
    b = Broker()
    ex = b.declare_exchange("warehouse", ROUND_ROBIN)
    c1, c2 = b.declare_queue("c1"), b.declare_queue("c2")
    b.bind(ex, "", c1)
    b.bind(ex, "", c2)
    for k in range(4):
        b.publish(ex, "", env(seq=k, kind=JOIN))
    assert [e.seq for e in c1.buffer] == [0, 2]
    assert [e.seq for e in c2.buffer] == [1, 3]


def test_unroutable_goes_to_dead_letters(broker):
    ex = broker.exchanges["s-001"]
    assert broker.publish(ex, "nobody", env()) == 0
    assert [d.key for d in broker.dead_letters] == ["nobody"]


def test_app_envelope_for_unknown_session():
    b = Broker()
    ex = b.declare_exchange("x", BROADCAST)
    with pytest.raises(BrokerError):
        b.publish(ex, "", env(session="s-404"))
    # joins and control traffic are not tied to a live session
    assert b.publish(ex, "", env(session="s-404", kind=JOIN)) == 0


def test_consume_fifo_and_ownership(broker):
    owner, other = object(), object()
    q = broker.declare_queue("q", consumer=owner)
    ex = broker.exchanges["s-001"]
    broker.bind(ex, "S", q)
    broker.publish(ex, "S", env("join", kind=JOIN))
    broker.publish(ex, "S", env("login"))
    with pytest.raises(BrokerError):
        broker.consume(q, other)
    assert broker.consume(q, owner).label == "join"
    assert broker.consume(q, owner).label == "login"
    assert broker.consume(q, owner) is None
    with pytest.raises(BrokerError):
        broker.declare_queue("q", consumer=other)


def test_delete_exchange_drops_bindings_to_it():
    b = Broker()
    proto = b.declare_exchange("purchase", BROADCAST)
    tex = b.declare_exchange("customer", ROUND_ROBIN)
    b.bind(proto, "", tex)
    b.delete_exchange("customer")
    assert proto.bindings == []
    with pytest.raises(BrokerError):
        b.bind(tex, "", b.declare_queue("q"))


def test_binding_cycle_is_detected():
    b = Broker()
    x, y = b.declare_exchange("x", BROADCAST), b.declare_exchange("y", BROADCAST)
    b.bind(x, "", y)
    b.bind(y, "", x)
    with pytest.raises(BrokerError):
        b.publish(x, "", env(kind=JOIN))


def test_envelope_json():
    e = Envelope("Purchase", "s-001", "S", "B", "", (3,), APP, 7)
    doc = json.loads(e.dumps())
    assert list(doc) == ["protocol", "session", "from", "to", "label", "payload", "kind", "seq"]
    assert Envelope.from_json(doc) == e


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 60))
def test_round_robin_fairness(k, n):
    b = Broker()
    ex = b.declare_exchange("t", ROUND_ROBIN)
    qs = [b.declare_queue(f"q{i}") for i in range(k)]
    for q in qs:
        b.bind(ex, "", q)
    for i in range(n):
        assert b.publish(ex, "", env(seq=i, kind=JOIN)) == 1
    counts = [len(q) for q in qs]
    assert sum(counts) == n
    assert max(counts) - min(counts) <= 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), max_size=12))
def test_broadcast_completeness(bind_ops):
    b = Broker()
    ex = b.declare_exchange("p", BROADCAST)
    bindings = []
    for i, add in enumerate(bind_ops):
        if add or not bindings:
            bindings.append(b.bind(ex, "", b.declare_queue(f"q{i}")))
        else:
            b.unbind(ex, bindings.pop(0))
        assert b.publish(ex, "", env(kind=JOIN)) == len(ex.bindings)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("BSA"), st.sampled_from("BSA")), max_size=40),
       st.randoms(use_true_random=False))
def test_no_loss_no_duplication_and_per_pair_order(sends, rnd):
    b = Broker()
    ex = b.declare_exchange("s-001", DIRECT)
    queues = {r: b.declare_queue(r, consumer=r) for r in "BSA"}
    for r, q in queues.items():
        b.bind(ex, r, q)
    seqs: Counter = Counter()
    published = Counter()
    for frm, to in sends:
        seqs[frm] += 1
        published[to] += b.publish(ex, to, env(frm=frm, to=to, seq=seqs[frm]))
    consumed = {r: [] for r in "BSA"}
    # consumers interleave arbitrarily
    live = list("BSA")
    while live:
        r = rnd.choice(live)
        e = b.consume(queues[r], r)
        if e is None:
            live.remove(r)
        else:
            consumed[r].append(e)
    for r, q in queues.items():
        assert q.delivered == q.consumed == published[r] == len(consumed[r])
        per_sender: dict[str, list[int]] = {}
        for e in consumed[r]:
            per_sender.setdefault(e.from_role, []).append(e.seq)
        for s in per_sender.values():
            assert s == sorted(s) and len(set(s)) == len(s)
