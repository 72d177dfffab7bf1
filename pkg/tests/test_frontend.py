import copy

import pytest

from hornclaw.syntax import (
    App,
    Arith,
    Assert,
    BoolOp,
    Cmp,
    If,
    Let,
    Name,
    Oracle,
    Program,
    SourceError,
    TArrow,
    T_BOOL,
    T_INT,
    T_UNIT,
    parse,
)
from hornclaw.typecheck import TypeInferenceError, infer_types, normalize

MCCARTHY = """
let mc x = if x > 100 then x - 10 else mc (mc (x + 11))
assert x <= 101 => mc(x) = 91
"""

PAIR_GUARD = """
let f x y = assert (not (x () > 0 && y () < 0))
let h x y = x
let g n = f (h n) (h n)
"""

ITER_CHAIN = """
let app1 f g = if * then app1 (succ f) g else g f
let app2 i f = f i
let succ f x = f (x + 1)
let check x y = assert (x <= y)
let main i = app1 (check i) (app2 i)
"""


def test_parse_mccarthy_shape():
    p = parse(MCCARTHY)
    assert len(p.bindings) == 1
    mc = p.bindings[0]
    assert mc.name == "mc" and mc.params == ["x"]
    body = mc.body
    assert isinstance(body, If)
    assert isinstance(body.cond, Cmp) and body.cond.op == ">"
    assert isinstance(body.els, App)
    inner = body.els.arg
    assert isinstance(inner, App) and isinstance(inner.fn, Name)
    assert len(p.asserts) == 1


def test_parse_empty_program():
    p = parse("")
    assert p.bindings == [] and p.asserts == []


def test_parse_incomplete_binding():
    with pytest.raises(SourceError) as e:
        parse("let f = ")
    assert "end of input" in str(e.value)


def test_parse_duplicate_top_level():
    with pytest.raises(SourceError) as e:
        parse("let f x = x\nlet f y = y")
    assert "duplicate" in str(e.value)


def test_parse_unbound_name():
    with pytest.raises(SourceError) as e:
        parse("let f x = y")
    assert "unbound" in str(e.value)


def test_parse_application_left_associative():
    p = parse("let two a b = a\nlet u x = two x x")
    body = p.bindings[1].body
    assert isinstance(body, App) and isinstance(body.fn, App)
    assert isinstance(body.fn.fn, Name) and body.fn.fn.name == "two"


def test_parse_nondet_and_unit():
    p = parse("let k u = if * then u () else 0")
    body = p.bindings[0].body
    assert isinstance(body, If)
    from hornclaw.syntax import Nondet, UnitLit

    assert isinstance(body.cond, Nondet)
    assert isinstance(body.then.arg, UnitLit)


def test_parse_comments_and_precedence():
    p = parse("(* intro (* nested *) *) let f x = x <= 1 => x + 1 > 0 && x > 0")
    body = p.bindings[0].body
    assert isinstance(body, BoolOp) and body.op == "=>"
    assert isinstance(body.lhs, Cmp) and body.lhs.op == "<="
    rhs = body.rhs
    assert isinstance(rhs, BoolOp) and rhs.op == "&&"
    assert isinstance(rhs.lhs.lhs, Arith)


def test_infer_mccarthy():
    p = infer_types(parse(MCCARTHY))
    mc = p.bindings[0]
    assert mc.param_types == [T_INT] and mc.result_type == T_INT
    assert str(mc.fn_type()) == "Int -> Int"
    a = p.asserts[0]
    assert a.free_vars == [("x", T_INT)]


def test_infer_pair_guard_signatures():
    p = infer_types(parse(PAIR_GUARD))
    h = p.binding("h")
    assert str(h.fn_type()) == "Int -> Unit -> Int"
    f = p.binding("f")
    assert str(f.fn_type()) == "(Unit -> Int) -> (Unit -> Int) -> Unit"
    g = p.binding("g")
    assert str(g.fn_type()) == "Int -> Unit"


def test_infer_iter_chain_signatures():
    p = infer_types(parse(ITER_CHAIN))
    assert str(p.binding("check").fn_type()) == "Int -> Int -> Unit"
    assert str(p.binding("succ").fn_type()) == "(Int -> Unit) -> Int -> Unit"
    assert str(p.binding("app2").fn_type()) == "Int -> (Int -> Unit) -> Unit"
    assert (
        str(p.binding("app1").fn_type())
        == "(Int -> Unit) -> ((Int -> Unit) -> Unit) -> Unit"
    )


def test_infer_deterministic():
    p1 = infer_types(parse(ITER_CHAIN))
    p2 = infer_types(parse(ITER_CHAIN))
    for b1, b2 in zip(p1.bindings, p2.bindings):
        assert str(b1.fn_type()) == str(b2.fn_type())


def test_monomorphism_rejected():
    src = "let id x = x\nlet main u = if id true then id 1 else 0"
    with pytest.raises(TypeInferenceError) as e:
        infer_types(parse(src))
    assert "mismatch" in str(e.value)


def test_unresolved_type_rejected():
    with pytest.raises(TypeInferenceError):
        infer_types(parse("let id x = x"))


def test_occurs_check():
    with pytest.raises(TypeInferenceError) as e:
        infer_types(parse("let w x = x x"))
    assert "occurs" in str(e.value)


def test_normalize_names_calls_and_oracles():
    p = normalize(infer_types(parse(ITER_CHAIN)))
    app1 = p.binding("app1")
    body = app1.body
    assert isinstance(body, If)
    assert isinstance(body.cond, Oracle) and body.cond.name == "*1"
    # both branches are calls with atomic arguments
    assert isinstance(body.then, App) and isinstance(body.els, App)


def test_normalize_nested_calls_get_named():
    p = normalize(infer_types(parse(MCCARTHY)))
    els = p.binding("mc").body.els
    assert isinstance(els, Let)
    assert isinstance(els.rhs, App)  # inner call mc (x + 11)
    assert isinstance(els.body, App)  # outer call mc $1
    assert els.body.arg == Name("$1")


def test_normalize_idempotent():
    p = normalize(infer_types(parse(ITER_CHAIN)))
    snap = copy.deepcopy([b.body for b in p.bindings])
    q = normalize(p)
    assert [b.body for b in q.bindings] == snap


def test_normalize_no_asserts_means_empty_assert_set():
    p = normalize(infer_types(parse("let f x = x + 1")))
    assert p.asserts == []


def test_arrow_types_are_inhabited():
    p = infer_types(parse(ITER_CHAIN))
    arrow_types: set[str] = set()
    inhabited: set[str] = set()

    def walk(e):
        if e.ty is not None and isinstance(e.ty, TArrow):
            inhabited.add(str(e.ty))
        for f in ("lhs", "rhs", "cond", "then", "els", "fn", "arg", "body"):
            sub = getattr(e, f, None)
            if sub is not None and hasattr(sub, "ty"):
                walk(sub)

    for b in p.bindings:
        t = b.fn_type()
        while isinstance(t, TArrow):
            if isinstance(t.dom, TArrow):
                arrow_types.add(str(t.dom))
            t = t.cod
        walk(b.body)
    assert arrow_types <= inhabited
