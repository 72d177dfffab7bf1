"""Core Horn-clause IR: sorts, terms, formulas, clauses, systems, models.

Everything here is an immutable value; transformations build new objects.
Integer terms are kept in a sorted, gcd-normalized linear form so that
structural equality has semantic bite: two atoms that denote the same set
of integer points compare equal (``x > 100`` and ``x >= 101`` both live as
``x - 101 >= 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union


class HornError(Exception):
    """Malformed input to an IR operation (sort mismatch, bad arity...)."""


# ---------------------------------------------------------------------------
# sorts


@dataclass(frozen=True)
class Sort:
    kind: str  # "int" | "bool" | "unit" | "adt"
    name: str = ""

    def __str__(self) -> str:
        if self.kind == "adt":
            return self.name
        return {"int": "Int", "bool": "Bool", "unit": "Unit"}[self.kind]


INT = Sort("int")
BOOL = Sort("bool")
UNIT = Sort("unit")


def adt(name: str) -> Sort:
    return Sort("adt", name)


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    """A sorted variable.  Int-sorted variables appear in terms only inside
    a LinExpr; Var is used directly as a term for Bool/Unit/ADT sorts."""

    name: str
    sort: Sort

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class LinExpr:
    """Sum of integer-coefficient * variable, plus a constant.

    Coefficients are stored sorted by variable name with zero coefficients
    removed, so equal expressions are structurally equal.
    """

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def of(k: int) -> "LinExpr":
        return LinExpr((), k)

    @staticmethod
    def var(name: str, coeff: int = 1) -> "LinExpr":
        if coeff == 0:
            return LinExpr((), 0)
        return LinExpr(((name, coeff),), 0)

    @staticmethod
    def make(coeffs: Mapping[str, int], const: int = 0) -> "LinExpr":
        items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return LinExpr(items, const)

    def coeff_map(self) -> dict[str, int]:
        return dict(self.coeffs)

    def __add__(self, other: "LinExpr") -> "LinExpr":
        m = self.coeff_map()
        for v, c in other.coeffs:
            m[v] = m.get(v, 0) + c
        return LinExpr.make(m, self.const + other.const)

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        return self + other.scale(-1)

    def __neg__(self) -> "LinExpr":
        return self.scale(-1)

    def scale(self, k: int) -> "LinExpr":
        if k == 0:
            return LinExpr.of(0)
        return LinExpr(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    def plus_const(self, k: int) -> "LinExpr":
        return LinExpr(self.coeffs, self.const + k)

    @property
    def is_const(self) -> bool:
        return not self.coeffs

    def as_var(self) -> Optional[str]:
        """Name of the variable when this is a bare variable, else None."""
        if self.const == 0 and len(self.coeffs) == 1 and self.coeffs[0][1] == 1:
            return self.coeffs[0][0]
        return None

    def variables(self) -> set[str]:
        return {v for v, _ in self.coeffs}

    def subst(self, sub: Mapping[str, "Term"]) -> "LinExpr":
        out = LinExpr.of(self.const)
        for v, c in self.coeffs:
            if v in sub:
                t = sub[v]
                if not isinstance(t, LinExpr):
                    raise HornError(f"substituting non-integer term for {v}")
                out = out + t.scale(c)
            else:
                out = out + LinExpr.var(v, c)
        return out

    def eval(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[v] for v, c in self.coeffs)

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.coeffs:
            if c == 1:
                parts.append(("+" if parts else "") + v)
            elif c == -1:
                parts.append("-" + v)
            else:
                parts.append(("+" if parts and c > 0 else "") + f"{c}*{v}")
        if self.const or not parts:
            parts.append(("+" if parts and self.const >= 0 else "") + str(self.const))
        return "".join(parts)


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class UnitConst:
    def __str__(self) -> str:
        return "unit"


UNIT_VALUE = UnitConst()


@dataclass(frozen=True)
class CtorTerm:
    adt: str
    ctor: str
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.ctor
        return f"{self.ctor}({', '.join(map(str, self.args))})"


Term = Union[LinExpr, Var, BoolConst, UnitConst, CtorTerm]


def int_var(name: str) -> LinExpr:
    return LinExpr.var(name)


def term_sort(t: Term) -> Sort:
    if isinstance(t, LinExpr):
        return INT
    if isinstance(t, Var):
        return t.sort
    if isinstance(t, BoolConst):
        return BOOL
    if isinstance(t, UnitConst):
        return UNIT
    if isinstance(t, CtorTerm):
        return adt(t.adt)
    raise HornError(f"not a term: {t!r}")


def term_vars(t: Term) -> set[Var]:
    if isinstance(t, LinExpr):
        return {Var(v, INT) for v in t.variables()}
    if isinstance(t, Var):
        return {t}
    if isinstance(t, CtorTerm):
        out: set[Var] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    return set()


def term_subst(t: Term, sub: Mapping[str, Term]) -> Term:
    if isinstance(t, LinExpr):
        return t.subst(sub)
    if isinstance(t, Var):
        if t.name in sub:
            r = sub[t.name]
            if term_sort(r) != t.sort:
                raise HornError(
                    f"sort mismatch substituting {r} (sort {term_sort(r)}) for "
                    f"{t.name} (sort {t.sort})"
                )
            return r
        return t
    if isinstance(t, CtorTerm):
        return CtorTerm(t.adt, t.ctor, tuple(term_subst(a, sub) for a in t.args))
    return t


def var_term(v: Var) -> Term:
    """The canonical term form of a variable (Int vars become LinExprs)."""
    return LinExpr.var(v.name) if v.sort == INT else v


# ---------------------------------------------------------------------------
# formulas (constraints)
#
# Formulas are in negation normal form: negation lives only in atoms
# (BoolAtom/AdtEq carry a polarity; integer atoms are closed under negation
# except for equality, whose negation is the disjunction of two strict
# sides).  Iff is kept as a node because the canonical encoding defines
# success flags with it; engines lower it on demand.


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]

    def __str__(self) -> str:
        if not self.parts:
            return "true"
        return " /\\ ".join(_paren(p) for p in self.parts)


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]

    def __str__(self) -> str:
        if not self.parts:
            return "false"
        return " \\/ ".join(_paren(p) for p in self.parts)


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"

    def __str__(self) -> str:
        return f"({self.lhs} <-> {self.rhs})"


@dataclass(frozen=True)
class IntAtom:
    """``expr op 0`` with op one of "eq", "ge"; normalized at construction."""

    op: str
    expr: LinExpr

    def __str__(self) -> str:
        pos: dict[str, int] = {}
        neg: dict[str, int] = {}
        for v, c in self.expr.coeffs:
            (pos if c > 0 else neg)[v] = abs(c)
        lhs = LinExpr.make(pos, self.expr.const if self.expr.const > 0 else 0)
        rhs = LinExpr.make(neg, -self.expr.const if self.expr.const < 0 else 0)
        sym = "=" if self.op == "eq" else ">="
        return f"{lhs} {sym} {rhs}"


@dataclass(frozen=True)
class BoolAtom:
    term: Term  # Bool-sorted Var or BoolConst
    positive: bool = True

    def __str__(self) -> str:
        return str(self.term) if self.positive else f"~{self.term}"


@dataclass(frozen=True)
class AdtEq:
    lhs: Term
    rhs: Term
    positive: bool = True

    def __str__(self) -> str:
        return f"{self.lhs} {'=' if self.positive else '!='} {self.rhs}"


Formula = Union[And, Or, Iff, IntAtom, BoolAtom, AdtEq]

TRUE = And(())
FALSE = Or(())


def _paren(f: Formula) -> str:
    if isinstance(f, (And, Or)) and len(f.parts) > 1:
        return f"({f})"
    return str(f)


def _gcd_all(vals: Iterable[int]) -> int:
    g = 0
    for v in vals:
        g = math.gcd(g, abs(v))
    return g


def ge0(e: LinExpr) -> Formula:
    """e >= 0, gcd-tightened over the integers."""
    if e.is_const:
        return TRUE if e.const >= 0 else FALSE
    g = _gcd_all(c for _, c in e.coeffs)
    if g > 1:
        e = LinExpr(
            tuple((v, c // g) for v, c in e.coeffs), math.floor(e.const / g)
        )
    return IntAtom("ge", e)


def eq0(e: LinExpr) -> Formula:
    """e = 0, normalized (sign, gcd; infeasible congruences fold to false)."""
    if e.is_const:
        return TRUE if e.const == 0 else FALSE
    g = _gcd_all(c for _, c in e.coeffs)
    if e.const % g != 0:
        return FALSE
    e = LinExpr(tuple((v, c // g) for v, c in e.coeffs), e.const // g)
    if e.coeffs[0][1] < 0:
        e = e.scale(-1)
    return IntAtom("eq", e)


def int_le(a: LinExpr, b: LinExpr) -> Formula:
    return ge0(b - a)


def int_lt(a: LinExpr, b: LinExpr) -> Formula:
    return ge0((b - a).plus_const(-1))


def int_ge(a: LinExpr, b: LinExpr) -> Formula:
    return ge0(a - b)


def int_gt(a: LinExpr, b: LinExpr) -> Formula:
    return ge0((a - b).plus_const(-1))


def int_eq(a: LinExpr, b: LinExpr) -> Formula:
    return eq0(a - b)


def int_ne(a: LinExpr, b: LinExpr) -> Formula:
    d = a - b
    return disj([ge0(d.plus_const(-1)), ge0((-d).plus_const(-1))])


def conj(parts: Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            for q in p.parts:
                if q == FALSE:
                    return FALSE
                out.append(q)
        elif p == FALSE:
            return FALSE
        elif p != TRUE:
            out.append(p)
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(parts: Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, Or) and p.parts and all(
            not isinstance(q, And) or q.parts for q in p.parts
        ):
            for q in p.parts:
                if q == TRUE:
                    return TRUE
                out.append(q)
        elif p == TRUE:
            return TRUE
        elif p != FALSE:
            out.append(p)
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def neg(f: Formula) -> Formula:
    if isinstance(f, And):
        return disj([neg(p) for p in f.parts])
    if isinstance(f, Or):
        return conj([neg(p) for p in f.parts])
    if isinstance(f, Iff):
        return Iff(f.lhs, neg(f.rhs))
    if isinstance(f, IntAtom):
        if f.op == "ge":
            return ge0((-f.expr).plus_const(-1))
        return disj(
            [ge0(f.expr.plus_const(-1)), ge0((-f.expr).plus_const(-1))]
        )
    if isinstance(f, BoolAtom):
        if isinstance(f.term, BoolConst):
            return FALSE if f.term.value == f.positive else TRUE
        return BoolAtom(f.term, not f.positive)
    if isinstance(f, AdtEq):
        return AdtEq(f.lhs, f.rhs, not f.positive)
    raise HornError(f"not a formula: {f!r}")


def bool_atom(t: Term, positive: bool = True) -> Formula:
    if isinstance(t, BoolConst):
        return TRUE if t.value == positive else FALSE
    return BoolAtom(t, positive)


def fsubst(f: Formula, sub: Mapping[str, Term]) -> Formula:
    if isinstance(f, And):
        return conj([fsubst(p, sub) for p in f.parts])
    if isinstance(f, Or):
        return disj([fsubst(p, sub) for p in f.parts])
    if isinstance(f, Iff):
        lhs = fsubst(f.lhs, sub)
        rhs = fsubst(f.rhs, sub)
        if lhs == TRUE:
            return rhs
        if rhs == TRUE:
            return lhs
        if lhs == FALSE:
            return neg(rhs)
        if rhs == FALSE:
            return neg(lhs)
        return Iff(lhs, rhs)
    if isinstance(f, IntAtom):
        e = f.expr.subst(sub)
        return ge0(e) if f.op == "ge" else eq0(e)
    if isinstance(f, BoolAtom):
        return bool_atom(term_subst(f.term, sub), f.positive)
    if isinstance(f, AdtEq):
        lhs = term_subst(f.lhs, sub)
        rhs = term_subst(f.rhs, sub)
        if lhs == rhs:
            return TRUE if f.positive else FALSE
        return AdtEq(lhs, rhs, f.positive)
    raise HornError(f"not a formula: {f!r}")


def fvars(f: Formula) -> set[Var]:
    if isinstance(f, (And, Or)):
        out: set[Var] = set()
        for p in f.parts:
            out |= fvars(p)
        return out
    if isinstance(f, Iff):
        return fvars(f.lhs) | fvars(f.rhs)
    if isinstance(f, IntAtom):
        return {Var(v, INT) for v in f.expr.variables()}
    if isinstance(f, BoolAtom):
        return term_vars(f.term)
    if isinstance(f, AdtEq):
        return term_vars(f.lhs) | term_vars(f.rhs)
    raise HornError(f"not a formula: {f!r}")


def feval(f: Formula, env: Mapping[str, object]) -> bool:
    """Evaluate a ground-after-env formula; used by derivation replay."""
    if isinstance(f, And):
        return all(feval(p, env) for p in f.parts)
    if isinstance(f, Or):
        return any(feval(p, env) for p in f.parts)
    if isinstance(f, Iff):
        return feval(f.lhs, env) == feval(f.rhs, env)
    if isinstance(f, IntAtom):
        v = f.expr.eval({k: x for k, x in env.items() if isinstance(x, int)})
        return v == 0 if f.op == "eq" else v >= 0
    if isinstance(f, BoolAtom):
        t = f.term
        if isinstance(t, Var):
            val = env[t.name]
        else:
            val = t.value  # type: ignore[union-attr]
        return bool(val) == f.positive
    if isinstance(f, AdtEq):
        return (ground_term(f.lhs, env) == ground_term(f.rhs, env)) == f.positive
    raise HornError(f"not a formula: {f!r}")


def ground_term(t: Term, env: Mapping[str, object]) -> object:
    if isinstance(t, LinExpr):
        return t.eval({k: v for k, v in env.items() if isinstance(v, int)})
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, CtorTerm):
        return CtorTerm(t.adt, t.ctor, tuple(ground_term(a, env) for a in t.args))  # type: ignore[arg-type]
    return t


def to_dnf(f: Formula) -> list[tuple[Formula, ...]]:
    """Disjunctive normal form as a list of atom tuples.  Iff is expanded."""
    if isinstance(f, And):
        cubes: list[tuple[Formula, ...]] = [()]
        for p in f.parts:
            cubes = [c + d for c in cubes for d in to_dnf(p)]
        return cubes
    if isinstance(f, Or):
        out: list[tuple[Formula, ...]] = []
        for p in f.parts:
            out.extend(to_dnf(p))
        return out
    if isinstance(f, Iff):
        both = disj([conj([f.lhs, f.rhs]), conj([neg(f.lhs), neg(f.rhs)])])
        return to_dnf(both)
    return [(f,)]


# ---------------------------------------------------------------------------
# clauses and systems


@dataclass(frozen=True)
class Atom:
    """A predicate application.  ``qvars`` marks an atom-local universally
    quantified integer tuple occupying the leading argument positions; it is
    nonempty only between quantified abstraction and template instantiation.
    """

    pred: str
    args: tuple[Term, ...] = ()
    qvars: tuple[str, ...] = ()

    def __str__(self) -> str:
        inner = f"{self.pred}({', '.join(map(str, self.args))})"
        if self.qvars:
            return f"(forall {','.join(self.qvars)}. {inner})"
        return inner


@dataclass(frozen=True)
class Clause:
    vars: tuple[Var, ...]
    body: tuple[Atom, ...]
    constraint: Formula
    head: Optional[Atom]  # None = goal clause (head false)

    def __str__(self) -> str:
        parts = [str(a) for a in self.body]
        if self.constraint != TRUE:
            parts.append(str(self.constraint))
        lhs = " /\\ ".join(parts) if parts else "true"
        rhs = str(self.head) if self.head is not None else "false"
        return f"{lhs} -> {rhs}"

    def atoms(self) -> Iterator[Atom]:
        yield from self.body
        if self.head is not None:
            yield self.head


def clause_free_vars(body: Sequence[Atom], constraint: Formula, head: Optional[Atom]) -> tuple[Var, ...]:
    seen: dict[str, Var] = {}

    def visit_atom(a: Atom) -> None:
        for i, t in enumerate(a.args):
            for v in term_vars(t):
                if v.name not in a.qvars:
                    seen.setdefault(v.name, v)

    for a in body:
        visit_atom(a)
    for v in fvars(constraint):
        seen.setdefault(v.name, v)
    if head is not None:
        visit_atom(head)
    return tuple(sorted(seen.values(), key=lambda v: v.name))


def clause(body: Sequence[Atom], constraint: Formula, head: Optional[Atom]) -> Clause:
    """Build a clause, computing the quantifier list from free variables."""
    return Clause(clause_free_vars(body, constraint, head), tuple(body), constraint, head)


def clause_subst(c: Clause, sub: Mapping[str, Term]) -> Clause:
    """Capture-avoiding simultaneous substitution; quantifiers recomputed and
    linear terms renormalized."""
    var_sorts = {v.name: v.sort for v in c.vars}
    for name, t in sub.items():
        if name in var_sorts and term_sort(t) != var_sorts[name]:
            raise HornError(
                f"sort mismatch: {name}:{var_sorts[name]} := {t}:{term_sort(t)}"
            )
    body = tuple(
        Atom(a.pred, tuple(term_subst(t, sub) for t in a.args), a.qvars)
        for a in c.body
    )
    constraint = fsubst(c.constraint, sub)
    head = None
    if c.head is not None:
        head = Atom(
            c.head.pred,
            tuple(term_subst(t, sub) for t in c.head.args),
            c.head.qvars,
        )
    return clause(body, constraint, head)


_RENAME_COUNTER = [0]


def rename_apart(c: Clause, taken: set[str]) -> Clause:
    """Rename clause variables away from ``taken`` (for resolution)."""
    sub: dict[str, Term] = {}
    for v in c.vars:
        if v.name in taken:
            base = v.name
            while True:
                _RENAME_COUNTER[0] += 1
                fresh = f"{base}~{_RENAME_COUNTER[0]}"
                if fresh not in taken:
                    break
            sub[v.name] = var_term(Var(fresh, v.sort))
    if not sub:
        return c
    return clause_subst(c, sub)


@dataclass(frozen=True)
class Ctor:
    name: str
    fields: tuple[Sort, ...] = ()
    origin: str = ""  # function whose partial application built this shape

    def __str__(self) -> str:
        if not self.fields:
            return self.name
        return f"{self.name} {' '.join(map(str, self.fields))}"


@dataclass(frozen=True)
class AdtDecl:
    name: str
    ctors: tuple[Ctor, ...]

    def ctor(self, name: str) -> Ctor:
        for c in self.ctors:
            if c.name == name:
                return c
        raise HornError(f"no constructor {name} in {self.name}")

    def __str__(self) -> str:
        return f"{self.name} ::= " + " | ".join(map(str, self.ctors))


@dataclass(frozen=True)
class PredSig:
    name: str
    sorts: tuple[Sort, ...]


@dataclass(frozen=True)
class PredInfo:
    """Encoder bookkeeping: which columns are result / success flag, and the
    predicate's role ('func', 'eval'); consumed by specialization."""

    kind: str = "func"
    res: Optional[int] = None
    ok: Optional[int] = None
    fn: str = ""


@dataclass(frozen=True)
class ProvStep:
    op: str
    detail: tuple[tuple[str, object], ...] = ()

    def get(self, key: str, default: object = None) -> object:
        for k, v in self.detail:
            if k == key:
                return v
        return default


def prov(op: str, **kw: object) -> ProvStep:
    return ProvStep(op, tuple(sorted(kw.items())))


@dataclass(frozen=True)
class HornSystem:
    adts: tuple[AdtDecl, ...] = ()
    sigs: tuple[PredSig, ...] = ()
    clauses: tuple[Clause, ...] = ()
    provenance: tuple[ProvStep, ...] = ()
    meta: tuple[tuple[str, PredInfo], ...] = ()

    def sig(self, name: str) -> PredSig:
        for s in self.sigs:
            if s.name == name:
                return s
        raise HornError(f"undeclared predicate {name}")

    def has_pred(self, name: str) -> bool:
        return any(s.name == name for s in self.sigs)

    def adt_decl(self, name: str) -> AdtDecl:
        for a in self.adts:
            if a.name == name:
                return a
        raise HornError(f"undeclared ADT {name}")

    def info(self, name: str) -> PredInfo:
        for n, i in self.meta:
            if n == name:
                return i
        return PredInfo()

    def with_(self, **kw: object) -> "HornSystem":
        d = {
            "adts": self.adts,
            "sigs": self.sigs,
            "clauses": self.clauses,
            "provenance": self.provenance,
            "meta": self.meta,
        }
        d.update(kw)
        return HornSystem(**d)  # type: ignore[arg-type]

    def logged(self, step: ProvStep) -> "HornSystem":
        return self.with_(provenance=self.provenance + (step,))

    def goal_clauses(self) -> list[Clause]:
        return [c for c in self.clauses if c.head is None]

    def __str__(self) -> str:
        lines = [str(a) for a in self.adts]
        lines += [
            f"{s.name} : ({', '.join(map(str, s.sorts))})" for s in self.sigs
        ]
        lines += [f"  [{i}] {c}" for i, c in enumerate(self.clauses)]
        return "\n".join(lines)


def validate(s: HornSystem) -> list[str]:
    """All well-formedness defects, empty when the system is sound to use."""
    defects: list[str] = []
    sigs = {p.name: p for p in s.sigs}
    adts = {a.name: a for a in s.adts}

    def check_term(t: Term, where: str) -> None:
        if isinstance(t, CtorTerm):
            if t.adt not in adts:
                defects.append(f"{where}: unknown ADT {t.adt}")
                return
            decl = adts[t.adt]
            try:
                ctor = decl.ctor(t.ctor)
            except HornError:
                defects.append(f"{where}: unknown constructor {t.ctor}")
                return
            if len(ctor.fields) != len(t.args):
                defects.append(
                    f"{where}: constructor {t.ctor} expects "
                    f"{len(ctor.fields)} args, got {len(t.args)}"
                )
                return
            for fs, a in zip(ctor.fields, t.args):
                if term_sort(a) != fs:
                    defects.append(
                        f"{where}: field of {t.ctor} has sort {term_sort(a)}, "
                        f"expected {fs}"
                    )
                check_term(a, where)

    for i, c in enumerate(s.clauses):
        where = f"clause {i}"
        declared = {v.name for v in c.vars}
        free = {v.name for v in clause_free_vars(c.body, c.constraint, c.head)}
        for name in sorted(free - declared):
            defects.append(f"{where}: free variable {name} not in quantifier list")
        for name in sorted(declared - free):
            defects.append(f"{where}: quantified variable {name} unused")
        for a in c.atoms():
            if a.pred not in sigs:
                defects.append(f"{where}: undeclared predicate {a.pred}")
                continue
            sig = sigs[a.pred]
            if len(a.args) != len(sig.sorts):
                defects.append(
                    f"{where}: {a.pred} applied to {len(a.args)} args, "
                    f"arity is {len(sig.sorts)}"
                )
                continue
            for j, (t, srt) in enumerate(zip(a.args, sig.sorts)):
                if term_sort(t) != srt:
                    defects.append(
                        f"{where}: {a.pred} argument {j} has sort "
                        f"{term_sort(t)}, expected {srt}"
                    )
                check_term(t, where)
            if a.qvars:
                qset = set(a.qvars)
                outside = qset & {v.name for v in c.vars}
                if outside:
                    defects.append(
                        f"{where}: quantified-atom variables {sorted(outside)} "
                        "collide with clause variables"
                    )
    return defects


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class Pattern:
    """Shallow constructor pattern: ``_`` (ctor None) or ctor with variable
    or wildcard binders."""

    ctor: Optional[str] = None
    binders: tuple[Optional[str], ...] = ()

    def __str__(self) -> str:
        if self.ctor is None:
            return "_"
        inner = " ".join(b if b else "_" for b in self.binders)
        return f"({self.ctor}{' ' + inner if inner else ''})"


@dataclass(frozen=True)
class InterpCase:
    patterns: tuple[Pattern, ...]  # one per ADT-sorted argument, in order
    formula: Formula

    def __str__(self) -> str:
        pats = " ".join(map(str, self.patterns)) if self.patterns else "_"
        return f"{pats} -> {self.formula}"


@dataclass(frozen=True)
class Interp:
    params: tuple[Var, ...]
    cases: tuple[InterpCase, ...]

    def adt_positions(self) -> list[int]:
        return [i for i, p in enumerate(self.params) if p.sort.kind == "adt"]


@dataclass(frozen=True)
class Model:
    interps: tuple[tuple[str, Interp], ...] = ()

    def get(self, pred: str) -> Optional[Interp]:
        for n, i in self.interps:
            if n == pred:
                return i
        return None

    def names(self) -> list[str]:
        return [n for n, _ in self.interps]

    def __str__(self) -> str:
        out = []
        for n, i in self.interps:
            args = ", ".join(f"{p.name}:{p.sort}" for p in i.params)
            out.append(f"{n}({args}):")
            for c in i.cases:
                out.append(f"  {c}")
        return "\n".join(out)


def model(**interps: Interp) -> Model:
    return Model(tuple(sorted(interps.items())))


def total_interp(params: Sequence[Var], formula: Formula) -> Interp:
    """Single-case interpretation: every ADT argument matches anything."""
    pats = tuple(Pattern() for p in params if p.sort.kind == "adt")
    return Interp(tuple(params), (InterpCase(pats, formula),))
