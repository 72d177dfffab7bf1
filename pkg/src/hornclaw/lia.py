"""Linear integer arithmetic: satisfiability and validity of conjunctions.

The decision procedure is variable elimination over the rationals with
integer tightening (every derived inequality is gcd-reduced and floored,
which is sound over the integers), followed by bounded branch-and-bound to
close integrality gaps.  All arithmetic is exact; a verdict of UNSAT is
always sound, and budget exhaustion surfaces as a distinct outcome rather
than a wrong answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .core import (
    And,
    BoolAtom,
    BoolConst,
    Formula,
    HornError,
    Iff,
    IntAtom,
    LinExpr,
    Or,
    TRUE,
    FALSE,
    Var,
)

DEFAULT_BUDGET = 10_000


class BudgetExceeded(Exception):
    """Branch-and-bound node budget ran out before a verdict was certain."""


class NonlinearAtom(HornError):
    pass


@dataclass
class LiaResult:
    status: str  # "sat" | "unsat" | "budget"
    assignment: Optional[dict[str, object]] = None  # ints, plus bools

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


Atoms = Union[Formula, Iterable[Formula]]


_UNSAT_ATOM = IntAtom("ge", LinExpr.of(-1))


def conjuncts(c: Atoms) -> list[Formula]:
    """Flatten a conjunction into its atoms; reject non-conjunctive input."""
    if isinstance(c, And):
        parts: Iterable = c.parts
    elif isinstance(c, (IntAtom, BoolAtom)):
        parts = [c]
    elif c == FALSE:
        return [_UNSAT_ATOM]
    elif isinstance(c, (Or, Iff)) or hasattr(c, "positive") and hasattr(c, "lhs"):
        raise NonlinearAtom(f"not a conjunction of linear atoms: {c}")
    else:
        parts = list(c)  # type: ignore[arg-type]
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            out.extend(conjuncts(p))
        elif isinstance(p, (IntAtom, BoolAtom)):
            out.append(p)
        elif p == TRUE:
            continue
        elif p == FALSE:
            out.append(_UNSAT_ATOM)
        else:
            raise NonlinearAtom(f"unsupported atom for the integer core: {p}")
    return out


def _tighten(e: LinExpr) -> Optional[LinExpr]:
    """gcd-reduce ``e >= 0`` over the integers; None when trivially true."""
    if e.is_const:
        return None if e.const >= 0 else e
    g = 0
    for _, c in e.coeffs:
        g = math.gcd(g, abs(c))
    if g > 1:
        e = LinExpr(tuple((v, c // g) for v, c in e.coeffs), math.floor(e.const / g))
    return e


class _Budget:
    def __init__(self, n: int) -> None:
        self.left = n

    def spend(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise BudgetExceeded()


def _split(atoms: Sequence[Formula]):
    eqs: list[LinExpr] = []
    ges: list[LinExpr] = []
    bools: dict[str, bool] = {}
    for a in atoms:
        if isinstance(a, IntAtom):
            (eqs if a.op == "eq" else ges).append(a.expr)
        elif isinstance(a, BoolAtom):
            t = a.term
            if isinstance(t, BoolConst):
                if t.value != a.positive:
                    return None
            elif isinstance(t, Var):
                want = a.positive
                if bools.setdefault(t.name, want) != want:
                    return None
            else:
                raise NonlinearAtom(f"boolean atom over non-variable: {a}")
        else:
            raise NonlinearAtom(f"unsupported atom: {a}")
    return eqs, ges, bools


def _solve_equalities(eqs: list[LinExpr], ges: list[LinExpr]):
    """Substitute away equalities with a unit-coefficient variable.

    Returns (residual inequalities, back-substitutions in application order)
    or None when an equality is infeasible over the integers.
    """
    backsubs: list[tuple[str, LinExpr]] = []
    pending = list(eqs)
    ineqs = list(ges)
    while pending:
        e = pending.pop()
        if e.is_const:
            if e.const != 0:
                return None
            continue
        g = 0
        for _, c in e.coeffs:
            g = math.gcd(g, abs(c))
        if e.const % g != 0:
            return None
        if g > 1:
            e = LinExpr(tuple((v, c // g) for v, c in e.coeffs), e.const // g)
        unit = next((v for v, c in e.coeffs if c in (1, -1)), None)
        if unit is None:
            # no unit coefficient: fall back to a pair of inequalities
            ineqs.append(e)
            ineqs.append(e.scale(-1))
            continue
        c = dict(e.coeffs)[unit]
        rest = (e - LinExpr.var(unit, c)).scale(-c)  # unit := rest
        sub = {unit: rest}
        pending = [p.subst(sub) for p in pending]
        ineqs = [p.subst(sub) for p in ineqs]
        backsubs = [(v, r.subst(sub)) for v, r in backsubs]
        backsubs.append((unit, rest))
    return ineqs, backsubs


def _eliminate(ineqs: list[LinExpr]):
    """Fourier-Motzkin over the rationals with integer tightening.

    Returns (order, layers) where layers[i] are the inequalities mentioning
    order[i] but none of order[:i]; or "unsat" when a contradiction appears.
    """
    current: list[LinExpr] = []
    seen: set[LinExpr] = set()
    for e in ineqs:
        t = _tighten(e)
        if t is None:
            continue
        if t.is_const:
            return "unsat"
        if t not in seen:
            seen.add(t)
            current.append(t)
    order: list[str] = []
    layers: list[list[LinExpr]] = []
    while current:
        counts: dict[str, int] = {}
        for e in current:
            for v, _ in e.coeffs:
                counts[v] = counts.get(v, 0) + 1
        var = min(counts, key=lambda v: (counts[v], v))
        lowers = []  # coeff > 0: var >= -rest/coeff
        uppers = []  # coeff < 0
        rest: list[LinExpr] = []
        mine: list[LinExpr] = []
        for e in current:
            c = dict(e.coeffs).get(var, 0)
            if c > 0:
                lowers.append(e)
                mine.append(e)
            elif c < 0:
                uppers.append(e)
                mine.append(e)
            else:
                rest.append(e)
        order.append(var)
        layers.append(mine)
        derived: set[LinExpr] = set()
        for lo in lowers:
            a = dict(lo.coeffs)[var]
            for hi in uppers:
                b = -dict(hi.coeffs)[var]
                comb = lo.scale(b) + hi.scale(a)
                t = _tighten(comb)
                if t is None:
                    continue
                if t.is_const:
                    return "unsat"
                derived.add(t)
        current = rest + [d for d in derived if d not in rest]
        dedup: list[LinExpr] = []
        seen2: set[LinExpr] = set()
        for e in current:
            if e not in seen2:
                seen2.add(e)
                dedup.append(e)
        current = dedup
    return order, layers


def _sample(order: list[str], layers: list[list[LinExpr]]):
    """A rational point of the eliminated system (innermost var first)."""
    values: dict[str, Fraction] = {}
    for var, constraints in zip(reversed(order), reversed(layers)):
        lo: Optional[Fraction] = None
        hi: Optional[Fraction] = None
        for e in constraints:
            c = dict(e.coeffs)[var]
            rest = Fraction(e.const)
            for v, k in e.coeffs:
                if v != var:
                    # one-sided variables never get a layer of their own
                    rest += k * values.setdefault(v, Fraction(0))
            bound = Fraction(-rest, c)
            if c > 0:
                lo = bound if lo is None else max(lo, bound)
            else:
                hi = bound if hi is None else min(hi, bound)
        if lo is None and hi is None:
            values[var] = Fraction(0)
        elif lo is None:
            values[var] = Fraction(math.floor(hi))
        elif hi is None:
            values[var] = Fraction(math.ceil(lo))
        else:
            if math.ceil(lo) <= math.floor(hi):
                v = Fraction(max(math.ceil(lo), min(math.floor(hi), 0)))
            else:
                v = (lo + hi) / 2
            values[var] = v
    return values


def _search(ineqs: list[LinExpr], budget: _Budget) -> Optional[dict[str, Fraction]]:
    """Integer point of the inequality system, or None; raises on budget."""
    budget.spend()
    out = _eliminate(ineqs)
    if out == "unsat":
        return None
    order, layers = out
    point = _sample(order, layers)
    frac = next((v for v in order if point[v].denominator != 1), None)
    if frac is None:
        return point
    v = point[frac]
    below = math.floor(v)
    left = ineqs + [LinExpr.var(frac, -1).plus_const(below)]
    right = ineqs + [LinExpr.var(frac).plus_const(-(below + 1))]
    for branch in (left, right):
        got = _search(branch, budget)
        if got is not None:
            return got
    return None


def lia_sat(c: Atoms, budget: int = DEFAULT_BUDGET) -> LiaResult:
    """Decide a conjunction of linear atoms over the integers.

    SAT comes with a satisfying assignment (unconstrained variables get 0);
    UNSAT is exact.  A "budget" status means branch-and-bound gave up on an
    integrality gap and no verdict may be claimed.
    """
    atoms = conjuncts(c)
    split = _split(atoms)
    if split is None:
        return LiaResult("unsat")
    eqs, ges, bools = split
    solved = _solve_equalities(eqs, ges)
    if solved is None:
        return LiaResult("unsat")
    ineqs, backsubs = solved
    b = _Budget(budget)
    try:
        point = _search(ineqs, b)
    except BudgetExceeded:
        return LiaResult("budget")
    if point is None:
        return LiaResult("unsat")
    env = {v: int(x) for v, x in point.items()}
    for var, rest in reversed(backsubs):
        for v in rest.variables():
            env.setdefault(v, 0)
        env[var] = rest.eval({k: val for k, val in env.items()})
    assignment: dict[str, object] = dict(env)
    assignment.update(bools)
    for a in atoms:  # defensive re-check of the certificate
        if isinstance(a, IntAtom):
            for v in a.expr.variables():
                env.setdefault(v, 0)
                assignment.setdefault(v, 0)
            val = a.expr.eval(env)
            ok = val == 0 if a.op == "eq" else val >= 0
            if not ok:
                raise HornError(f"internal: sample violates {a}")
    return LiaResult("sat", assignment)


def lia_valid(
    premise: Atoms, conclusion: Atoms, budget: int = DEFAULT_BUDGET
) -> bool:
    """True when every integer solution of the premise satisfies the
    conclusion.  Checked atom-by-atom: premise AND NOT(atom) must be UNSAT.
    Raises BudgetExceeded when branch-and-bound cannot settle a case."""
    prem = conjuncts(premise)
    for a in conjuncts(conclusion):
        negated: list[list[Formula]]
        if isinstance(a, IntAtom):
            if a.op == "ge":
                negated = [[IntAtom("ge", (-a.expr).plus_const(-1))]]
            else:
                negated = [
                    [IntAtom("ge", a.expr.plus_const(-1))],
                    [IntAtom("ge", (-a.expr).plus_const(-1))],
                ]
        elif isinstance(a, BoolAtom):
            negated = [[BoolAtom(a.term, not a.positive)]]
        else:
            raise NonlinearAtom(f"unsupported conclusion atom: {a}")
        for case in negated:
            r = lia_sat(prem + case, budget)
            if r.status == "budget":
                raise BudgetExceeded()
            if r.is_sat:
                return False
    return True
