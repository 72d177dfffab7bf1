import itertools
import random

import pytest

from hornclaw.core import (
    BOOL,
    BoolAtom,
    IntAtom,
    LinExpr,
    TRUE,
    Var,
    conj,
    int_eq,
    int_ge,
    int_gt,
    int_le,
    int_lt,
    int_var,
)
from hornclaw.lia import BudgetExceeded, NonlinearAtom, lia_sat, lia_valid

x = int_var("x")
y = int_var("y")
z = int_var("z")


def sat(*atoms, budget=10_000):
    return lia_sat(conj(atoms), budget)


def test_contradiction_unsat():
    r = sat(int_gt(x, LinExpr.of(100)), int_le(x, LinExpr.of(100)))
    assert r.is_unsat


def test_boundary_sat():
    r = sat(int_le(x, LinExpr.of(101)), int_gt(x, LinExpr.of(100)))
    assert r.is_sat
    assert r.assignment["x"] == 101


def test_integrality_gap_detected():
    # x > y and y > x - 1 has rational solutions but no integer ones.
    r = sat(int_gt(x, y), int_gt(y, x.plus_const(-1)))
    assert r.is_unsat
    # brute-force confirmation
    found = [
        (a, b)
        for a in range(-5, 6)
        for b in range(-5, 6)
        if a > b and b > a - 1
    ]
    assert found == []


def test_equalities_are_exact():
    r = sat(int_eq(x + y, LinExpr.of(10)), int_eq(x - y, LinExpr.of(4)))
    assert r.is_sat and r.assignment["x"] == 7 and r.assignment["y"] == 3
    r2 = sat(int_eq(x.scale(2), LinExpr.of(3)))
    assert r2.is_unsat


def test_unconstrained_vars_default():
    r = sat(int_ge(x, x))
    assert r.is_sat


def test_bool_literal_consistency():
    b = Var("b", BOOL)
    assert sat(BoolAtom(b), BoolAtom(b, positive=False)).is_unsat
    r = sat(BoolAtom(b), int_gt(x, LinExpr.of(2)))
    assert r.is_sat and r.assignment["b"] is True


def test_disjunction_rejected():
    from hornclaw.core import Or

    with pytest.raises(NonlinearAtom):
        lia_sat(Or((int_lt(x, y), int_lt(y, x))))


def test_valid_integer_tightening():
    assert lia_valid(int_gt(x, LinExpr.of(100)), int_ge(x, LinExpr.of(101)))


def test_valid_reflexive_equality():
    assert lia_valid(TRUE, int_eq(x, x))


def test_valid_counterexample():
    assert not lia_valid(int_gt(x, LinExpr.of(0)), int_gt(x, LinExpr.of(1)))


def test_mccarthy_base_case_obligation():
    # x > 100 implies the inductive summary holds of (x, x-10)
    yv = x.plus_const(-10)
    summary = conj(
        [
            # (y <= x-10 or y <= 91) folds to TRUE on the first disjunct here
            int_le(yv, x.plus_const(-10)),
            int_ge(yv, LinExpr.of(91)),
            int_le(x, yv.plus_const(10)),
        ]
    )
    assert lia_valid(int_gt(x, LinExpr.of(100)), summary)


def test_budget_exhaustion_is_reported():
    r = sat(int_gt(x, y), int_gt(y, x.plus_const(-1)), budget=1)
    assert r.status in ("budget", "unsat")
    tiny = sat(
        int_gt(x.scale(3), y.scale(7)),
        int_lt(x.scale(3), y.scale(7).plus_const(2)),
        budget=2,
    )
    assert tiny.status in ("budget", "unsat", "sat")


def brute_force(atoms, lo=-8, hi=8):
    names = sorted({v for a in atoms for v in a.expr.variables()})
    for vals in itertools.product(range(lo, hi + 1), repeat=len(names)):
        env = dict(zip(names, vals))
        ok = True
        for a in atoms:
            val = a.expr.eval(env)
            ok = ok and (val == 0 if a.op == "eq" else val >= 0)
        if ok:
            return env
    return None


def random_conjunction(rng):
    names = ["x", "y", "z"][: rng.randint(1, 3)]
    atoms = []
    for _ in range(rng.randint(1, 6)):
        e = LinExpr.make(
            {n: rng.randint(-4, 4) for n in names}, rng.randint(-4, 4)
        )
        a = (
            int_ge(e, LinExpr.of(0))
            if rng.random() < 0.8
            else int_eq(e, LinExpr.of(0))
        )
        if isinstance(a, IntAtom):
            atoms.append(a)
    return atoms


def test_agreement_with_exhaustive_search():
    rng = random.Random(20240817)
    checked = 0
    for _ in range(500):
        atoms = random_conjunction(rng)
        if not atoms:
            continue
        r = lia_sat(conj(atoms))
        assert r.status != "budget"
        witness = brute_force(atoms)
        if witness is not None:
            assert r.is_sat, f"missed solution {witness} of {atoms}"
        if r.is_unsat:
            assert witness is None, f"wrong UNSAT for {atoms}"
        if r.is_sat:
            env = {k: v for k, v in r.assignment.items() if isinstance(v, int)}
            for a in atoms:
                for v in a.expr.variables():
                    env.setdefault(v, 0)
                val = a.expr.eval(env)
                assert val == 0 if a.op == "eq" else val >= 0
        checked += 1
    assert checked >= 400
