import pytest

from hornclaw.core import (
    AdtDecl,
    Atom,
    BOOL,
    BoolAtom,
    BoolConst,
    Clause,
    Ctor,
    CtorTerm,
    FALSE,
    HornError,
    HornSystem,
    INT,
    IntAtom,
    LinExpr,
    PredSig,
    TRUE,
    UNIT,
    UNIT_VALUE,
    Var,
    adt,
    clause,
    clause_subst,
    conj,
    disj,
    eq0,
    fsubst,
    ge0,
    int_eq,
    int_gt,
    int_le,
    int_lt,
    int_ne,
    int_var,
    neg,
    to_dnf,
    validate,
)
from hornclaw.match import clause_alpha_eq, systems_equivalent

x = int_var("x")
y = int_var("y")
z = int_var("z")


def test_linexpr_normal_form():
    assert x + y == y + x
    assert (x + x) == LinExpr.var("x", 2)
    assert (x - x) == LinExpr.of(0)
    assert (x + LinExpr.of(3)).const == 3
    assert str(x - y + LinExpr.of(2)) == "x-y+2"


def test_linexpr_subst_and_eval():
    e = x + y.scale(2) + LinExpr.of(1)
    assert e.subst({"x": LinExpr.of(5)}) == y.scale(2) + LinExpr.of(6)
    assert e.eval({"x": 1, "y": 3}) == 8


def test_atom_canonicalization_gives_semantic_equality():
    # x > 100 and x >= 101 denote the same integer set
    assert int_gt(x, LinExpr.of(100)) == ge0(x.plus_const(-101))
    # 2x >= 3 tightens to x >= 2
    assert ge0(x.scale(2).plus_const(-3)) == ge0(x.plus_const(-2))
    # 2x = 3 has no integer solutions
    assert eq0(x.scale(2).plus_const(-3)) == FALSE
    assert eq0(x.scale(2) - y.scale(2)) == eq0(x - y)
    assert eq0(y - x) == eq0(x - y)


def test_connective_smart_constructors():
    a = int_le(x, y)
    assert conj([TRUE, a]) == a
    assert conj([FALSE, a]) == FALSE
    assert disj([TRUE, a]) == TRUE
    assert disj([FALSE, a]) == a
    assert conj([]) == TRUE
    assert disj([]) == FALSE


def test_negation_is_involutive_on_atoms():
    a = int_lt(x, y)
    assert neg(neg(a)) == a
    b = BoolAtom(Var("ok", BOOL))
    assert neg(b) == BoolAtom(Var("ok", BOOL), positive=False)
    # integer equality negates to a strict two-sided split
    parts = neg(int_eq(x, y))
    assert parts == int_ne(x, y)
    assert len(to_dnf(parts)) == 2


def test_fsubst_folds_constants():
    f = conj([int_gt(x, LinExpr.of(0)), BoolAtom(Var("b", BOOL))])
    g = fsubst(f, {"x": LinExpr.of(5), "b": BoolConst(True)})
    assert g == TRUE
    h = fsubst(f, {"x": LinExpr.of(-1)})
    assert h == FALSE


def mc_system():
    mc = lambda a, b: Atom("mc", (a, b))
    c1 = clause([], int_gt(x, LinExpr.of(100)), mc(x, x.plus_const(-10)))
    c2 = clause(
        [mc(x.plus_const(11), y), mc(y, z)],
        int_le(x, LinExpr.of(100)),
        mc(x, z),
    )
    c3 = clause(
        [mc(x, y)],
        conj([int_le(x, LinExpr.of(101)), int_ne(y, LinExpr.of(91))]),
        None,
    )
    return HornSystem(
        sigs=(PredSig("mc", (INT, INT)),),
        clauses=(c1, c2, c3),
    )


def test_validate_well_formed():
    assert validate(mc_system()) == []


def test_validate_arity_defect():
    s = mc_system()
    bad = clause([], TRUE, Atom("mc", (x, y, z)))
    s2 = s.with_(clauses=s.clauses + (bad,))
    defects = validate(s2)
    assert any("clause 3" in d and "arity" in d for d in defects)


def test_validate_scoping_defect():
    s = mc_system()
    c = s.clauses[0]
    broken = Clause(c.vars[:0], c.body, c.constraint, c.head)
    defects = validate(s.with_(clauses=(broken,) + s.clauses[1:]))
    assert any("free variable x" in d for d in defects)


def test_substitute_constant_folding():
    body = Atom("mc", (x.plus_const(11), y))
    c = clause([body], TRUE, Atom("p", (y,)))
    c2 = clause_subst(c, {"x": LinExpr.of(5)})
    assert c2.body[0] == Atom("mc", (LinExpr.of(16), y))


def test_substitute_identity():
    c = mc_system().clauses[1]
    assert clause_subst(c, {}) == c


def test_substitute_capture_avoidance_by_quantifier_recomputation():
    # x := v+1 brings in a fresh v; then v := x restores the old name.
    c = clause([Atom("p", (x,))], TRUE, None)
    c1 = clause_subst(c, {"x": int_var("v").plus_const(1)})
    assert [v.name for v in c1.vars] == ["v"]
    c2 = clause_subst(c1, {"v": x})
    assert [v.name for v in c2.vars] == ["x"]
    assert c2.body[0] == Atom("p", (x.plus_const(1),))


def test_substitute_distributes_over_structure():
    c = mc_system().clauses[1]
    sub = {"y": z.plus_const(7)}
    whole = clause_subst(c, sub)
    assert whole.head.args == tuple(
        t.subst(sub) for t in c.head.args
    )
    assert whole.constraint == fsubst(c.constraint, sub)
    assert whole.body == tuple(
        Atom(a.pred, tuple(t.subst(sub) for t in a.args)) for a in c.body
    )


def test_substitute_sort_mismatch():
    c = clause([Atom("q", (Var("b", BOOL),))], TRUE, None)
    with pytest.raises(HornError):
        clause_subst(c, {"b": x})


def test_alpha_equality():
    a = clause([Atom("p", (x, y))], int_lt(x, y), Atom("p", (y, x)))
    b = clause(
        [Atom("p", (int_var("u"), int_var("w")))],
        int_lt(int_var("u"), int_var("w")),
        Atom("p", (int_var("w"), int_var("u"))),
    )
    assert clause_alpha_eq(a, b)
    c = clause([Atom("p", (x, y))], int_lt(y, x), Atom("p", (y, x)))
    assert not clause_alpha_eq(a, c)


def test_system_equivalence_with_pred_bijection():
    s1 = mc_system()
    renamed = HornSystem(
        sigs=(PredSig("f91", (INT, INT)),),
        clauses=tuple(
            clause(
                [Atom("f91", a.args) for a in c.body],
                c.constraint,
                Atom("f91", c.head.args) if c.head else None,
            )
            for c in s1.clauses
        ),
    )
    assert systems_equivalent(s1, renamed)
    assert not systems_equivalent(s1, renamed, map_preds=False)


def test_unit_column_insensitivity():
    u = Var("u", UNIT)
    s1 = HornSystem(
        sigs=(PredSig("h", (INT, UNIT, INT)),),
        clauses=(clause([], TRUE, Atom("h", (x, u, x))),),
    )
    s2 = HornSystem(
        sigs=(PredSig("h", (INT, UNIT, INT)),),
        clauses=(clause([], TRUE, Atom("h", (x, UNIT_VALUE, x))),),
    )
    assert not systems_equivalent(s1, s2, map_preds=False)
    assert systems_equivalent(s1, s2, map_preds=False, ignore_unit=True)


def test_ctor_terms_validate():
    clo = AdtDecl("clo", (Ctor("h", (INT,), "h"),))
    sig = PredSig("Ev", (adt("clo"), INT))
    good = clause([], TRUE, Atom("Ev", (CtorTerm("clo", "h", (x,)), x)))
    s = HornSystem(adts=(clo,), sigs=(sig,), clauses=(good,))
    assert validate(s) == []
    bad = clause([], TRUE, Atom("Ev", (CtorTerm("clo", "g", (x,)), x)))
    defects = validate(s.with_(clauses=(bad,)))
    assert any("unknown constructor g" in d for d in defects)
