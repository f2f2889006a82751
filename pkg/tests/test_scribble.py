import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_protocol, random_protocol_source
from session_actors.protocols import NAMES, load, source
from session_actors.scribble import (
    Choice,
    Continue,
    MessageSignature,
    PayloadItem,
    ProtocolError,
    Rec,
    Transfer,
    parse_global,
    pretty,
    roles_of,
    validate,
)
from session_actors.scribble.parser import tokenize

PURCHASE = source("purchase")
STORELOAD = source("storeload")


def sig(label, *sorts):
    return MessageSignature(label, tuple(PayloadItem(s) for s in sorts))


def errors_of(src):
    try:
        p = parse_global(src)
    except ProtocolError as exc:
        return [d.message for d in exc.diagnostics]
    return [d.message for d in validate(p) if d.severity == "error"]


def test_purchase_top_level_shape():
    p = parse_global(PURCHASE)
    assert p.name == "Purchase"
    assert p.roles == ("B", "S", "A")
    t1, t2, t3, ch = p.body
    assert t1 == Transfer(sig("login", "string"), "B", ("S",))
    assert t2 == Transfer(sig("login", "string"), "S", ("A",))
    assert t3 == Transfer(sig("authenticate", "string"), "A", ("B", "S"))
    assert isinstance(ch, Choice) and ch.at == "B" and len(ch.branches) == 3


def test_empty_label_and_payload_names():
    p = parse_global(PURCHASE)
    quote = p.body[3].branches[0][1]
    assert quote.sig.label == ""
    assert quote.sig.payload[0].name == "quote"
    # names never take part in equality
    assert quote.sig == sig("", "int")


def test_empty_body():
    p = parse_global("global protocol P (role A, role B) {}")
    assert p.body == ()
    assert roles_of(p) == ["A", "B"]


def test_roles_of_preserves_declaration_order():
    assert roles_of(load("purchase")) == ["B", "S", "A"]
    assert roles_of(load("storeload")) == ["D", "S"]


def test_storeload_recursion():
    p = parse_global(STORELOAD)
    (rec,) = p.body
    assert isinstance(rec, Rec) and rec.var == "Rec"
    assert rec.body[0].branches[0][-1] == Continue("Rec")


def test_continue_outside_rec_is_unbound():
    moved = STORELOAD.replace("     continue Rec;}", "}").replace("acc() from D to S;}}}", "acc() from D to S;}} continue Rec;}")
    with pytest.raises(ProtocolError) as exc:
        parse_global(moved)
    assert [d.message for d in exc.value.diagnostics] == ["unbound recursion variable Rec"]
    d = exc.value.diagnostics[0]
    lines = moved.splitlines()
    assert lines[d.line - 1][d.column - 1:].startswith("Rec;")


@pytest.mark.parametrize("name", NAMES)
def test_corpus_validates_and_round_trips(name):
    p = load(name)
    assert validate(p) == []
    text = pretty(p)
    assert parse_global(text) == p
    assert pretty(parse_global(text)) == text


def test_pretty_layout():
    text = pretty(load("storeload"))
    assert text == (
        "global protocol StoreLoad(role D, role S) {\n"
        "  rec Rec {\n"
        "    choice at S {\n"
        "      request(string:product, int:n) from S to D;\n"
        "      put(string:product, int:n) from D to S;\n"
        "      continue Rec;\n"
        "    } or {\n"
        "      quit() from S to D;\n"
        "      acc() from D to S;\n"
        "    }\n"
        "  }\n"
        "}\n"
    )


def test_choice_branch_must_start_at_chooser():
    bad = PURCHASE.replace("{buy(string:product) from B to S;", "{buy(string:product) from S to B;")
    assert "choice branch must start at chooser B" in errors_of(bad)


def test_indistinguishable_branches():
    bad = """global protocol P (role B, role S) {
      choice at B { buy(string) from B to S; } or { buy(string) from B to S; quit() from B to S; }
    }"""
    assert "indistinguishable branch labels for receiver S" in errors_of(bad)


@pytest.mark.parametrize(
    "src, message",
    [
        ("global protocol P (role A) {}", "a protocol needs at least two roles"),
        ("global protocol P (role A, role A) {}", "duplicate role A"),
        ("global protocol P (role A, role B) { m() from A to C; }", "undeclared role C"),
        ("global protocol P (role A, role B) { m() from A to A; }", "role A sends to itself"),
        ("global protocol P (role A, role B) { rec X { continue X; } }", None),
        ("global protocol P (role A, role B) { rec X { m() from A to B; continue X; m() from B to A; } }",
         "unreachable interaction after continue X"),
    ],
)
def test_well_formedness_errors(src, message):
    errs = errors_of(src)
    assert errs
    if message is not None:
        assert message in errs


def test_unprojectable_is_reported():
    # C cannot tell which branch B chose
    src = """global protocol P (role B, role S, role C) {
      choice at B { a() from B to S; x() from S to C; } or { b() from B to S; y() from C to S; }
    }"""
    errs = errors_of(src)
    assert any(e.startswith("unprojectable for role C") for e in errs)


@pytest.mark.parametrize("word", ["parallel", "interrupt", "interruptible", "do", "and"])
def test_unsupported_constructs(word):
    src = f"global protocol P (role A, role B) {{ {word} {{ m() from A to B; }} }}"
    errs = errors_of(src)
    assert any("unsupported construct" in e for e in errs)


def test_unknown_sort_is_a_parse_error():
    with pytest.raises(ProtocolError) as exc:
        parse_global("global protocol P (role A, role B) { m(float) from A to B; }")
    assert "unknown payload sort" in str(exc.value)


def test_comments_are_ignored():
    with_comments = "// header\n" + PURCHASE.replace("choice at B", "// pick\n  choice at B")
    assert parse_global(with_comments) == parse_global(PURCHASE)


def _mutants(src):
    toks = [t for t in tokenize(src) if t.kind != "eof"]
    lines = src.splitlines(keepends=True)
    starts = [0]
    for line in lines:
        starts.append(starts[-1] + len(line))

    def offset(t):
        return starts[t.line - 1] + t.column - 1

    for t in toks:
        if t.kind == "punct":
            o = offset(t)
            yield f"delete {t.text!r} at {t.line}:{t.column}", src[:o] + " " + src[o + len(t.text):]
    for t in toks[::3]:
        o = offset(t)
        yield f"insert ')' at {t.line}:{t.column}", src[:o] + ") " + src[o:]


@pytest.mark.parametrize("name", ["purchase", "storeload"])
def test_rejection_is_total(name):
    src = source(name)
    n = 0
    for what, mutant in _mutants(src):
        n += 1
        with pytest.raises(ProtocolError):
            parse_global(mutant)
    assert n > 40


def test_validate_is_pure():
    for name in NAMES:
        p = load(name)
        assert validate(p) == validate(p)
    bad = parse_global("global protocol P (role A, role B) { m() from A to C; m() from A to A; }")
    assert validate(bad) == validate(bad) and len(validate(bad)) >= 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_protocols_round_trip(seed):
    p = random_protocol(random.Random(seed))
    assert parse_global(pretty(p)) == p


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_parser_never_returns_partial_ast(seed):
    rng = random.Random(seed)
    src = random_protocol_source(rng)
    cut = rng.randint(0, len(src) - 1)
    truncated = src[:cut]
    with pytest.raises(ProtocolError) as exc:
        parse_global(truncated)
    for d in exc.value.diagnostics:
        assert d.line >= 1 and d.column >= 1
