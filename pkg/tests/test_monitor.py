import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_protocol, random_traces, role_alphabet
from session_actors.fsm import build_fsm, fsm_accepts, recv, send
from session_actors.monitor import (
    ARITY_MISMATCH,
    DIRECTION_MISMATCH,
    LABEL_MISMATCH,
    NO_TRANSITION,
    ROLE_MISMATCH,
    Violation,
    classify,
    create_monitor,
    is_complete,
    step,
)
from session_actors.projection import project_role
from session_actors.protocols import load
from session_actors.runtime.system import sorts_of


def fsm_of(name, role):
    return build_fsm(project_role(load(name), role))


D = fsm_of("storeload", "D")
S = fsm_of("storeload", "S")
A = fsm_of("purchase", "A")


def test_create_monitor():
    m = create_monitor(D, "s42", "D")
    assert (m.current, m.step_count, m.session, m.role) == (0, 0, "s42", "D")
    b = create_monitor(fsm_of("purchase_loop", "B"), "s7", "B")
    assert [str(t.action) for t in b.fsm.outgoing(b.current)] == ["S!login(string)"]


def test_monitors_are_independent():
    m1, m2 = create_monitor(D, "s1", "D"), create_monitor(D, "s2", "D")
    assert step(m1, recv("S", "request", "string", "int")) == 1
    assert m2.current == 0 and m2.step_count == 0


def test_step_ok():
    m = create_monitor(D, "s", "D")
    assert step(m, recv("S", "request", "string", "int")) == 1
    assert m.step_count == 1


def test_consecutive_requests_are_no_transition():
    m = create_monitor(S, "s", "S")
    assert step(m, send("D", "request", "string", "int")) == 1
    v = step(m, send("D", "request", "string", "int"))
    assert isinstance(v, Violation) and v.kind == NO_TRANSITION
    assert v.state == 1 and m.current == 1


def test_put_before_request_is_no_transition():
    m = create_monitor(S, "s", "S")
    v = step(m, recv("D", "put", "string", "int"))
    assert isinstance(v, Violation) and v.kind == NO_TRANSITION and v.state == 0


@pytest.mark.parametrize(
    "action, kind",
    [
        (send("D", "requets", "string", "int"), LABEL_MISMATCH),
        (send("X", "request", "string", "int"), ROLE_MISMATCH),
        (recv("D", "request", "string", "int"), DIRECTION_MISMATCH),
        (send("D", "request", "string"), ARITY_MISMATCH),
        (send("D", "request", "int", "int"), ARITY_MISMATCH),
        (recv("D", "acc"), NO_TRANSITION),
    ],
)
def test_classification(action, kind):
    m = create_monitor(S, "s", "S")
    v = step(m, action)
    assert v.kind == kind
    assert m.current == 0 and m.step_count == 0


def test_no_transition_means_no_key_match():
    m = create_monitor(S, "s", "S")
    v = step(m, recv("D", "put", "string", "int"))
    assert all(t.action.key != v.offending.key for t in S.outgoing(v.state))


def test_is_complete():
    m = create_monitor(D, "s", "D")
    assert not is_complete(m)
    step(m, recv("S", "quit"))
    step(m, send("S", "acc"))
    assert is_complete(m)
    a = create_monitor(A, "s", "A")
    for act in (recv("S", "login", "string"), send("B", "authenticate", "string"),
                send("S", "authenticate", "string")):
        assert not isinstance(step(a, act), Violation)
    assert is_complete(a)


def test_violation_json():
    m = create_monitor(S, "s-001", "S")
    v = step(m, recv("D", "put", "string", "int"))
    doc = json.loads(v.dumps())
    assert list(doc) == ["kind", "session", "role", "state", "action", "description"]
    assert doc["action"] == {"dir": "receive", "peer": "D", "label": "put", "arity": 2}
    assert doc["session"] == "s-001" and doc["state"] == 0


def test_check_matches_step():
    m = create_monitor(S, "s", "S")
    assert m.check("send", "D", "request", ("apple", 3), sorts_of) is None
    assert m.current == 1
    v = m.check("receive", "D", "put", ("apple", "3"), sorts_of)
    assert v.kind == ARITY_MISMATCH and m.current == 1
    assert m.check("receive", "D", "put", ("apple", 3), sorts_of) is None
    assert m.step_count == 2


def test_check_rejects_bool_for_int():
    m = create_monitor(S, "s", "S")
    v = m.check("send", "D", "request", ("apple", True), sorts_of)
    assert v is not None and v.kind == ARITY_MISMATCH


def _fold(m, trace):
    for i, a in enumerate(trace):
        r = step(m, a)
        if isinstance(r, Violation):
            return False, i
    return True, None


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monitor_agrees_with_fsm_accepts(seed):
    rng = random.Random(seed)
    p = random_protocol(rng)
    for r in p.roles:
        lt = project_role(p, r)
        fsm = build_fsm(lt)
        for trace in random_traces(p, r, lt, rng, 15):
            res = fsm_accepts(fsm, trace)
            m = create_monitor(fsm, "s", r)
            assert _fold(m, trace) == (res.accepted, res.index)
            if res.accepted:
                assert m.current == res.state and m.step_count == len(trace)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_no_silent_advance(seed):
    rng = random.Random(seed)
    p = random_protocol(rng)
    r = rng.choice(p.roles)
    fsm = build_fsm(project_role(p, r))
    alpha = role_alphabet(p, r)
    m = create_monitor(fsm, "s", r)
    for _ in range(12):
        a = rng.choice(alpha)
        before = (m.current, m.step_count)
        legal = fsm.lookup(m.current, a)
        legal = legal is not None and legal.action.sorts == a.sorts
        res = step(m, a)
        if isinstance(res, Violation):
            assert not legal
            assert (m.current, m.step_count) == before
            assert classify(fsm, m.current, a) == res.kind
        else:
            assert legal and m.step_count == before[1] + 1
