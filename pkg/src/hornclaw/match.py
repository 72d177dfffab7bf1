"""Term unification and structural comparison up to renaming.

Unification backs resolution, instantiation and model checking; the
matchers decide whether two clauses or systems are the same modulo a
bijective renaming of variables (and optionally predicates, ADTs and
constructors), which is the equality notion the golden tests use.
"""

from __future__ import annotations

from typing import Iterator, Mapping, Optional, Sequence

from .core import (
    AdtEq,
    And,
    Atom,
    BoolAtom,
    BoolConst,
    Clause,
    CtorTerm,
    Formula,
    HornError,
    HornSystem,
    Iff,
    IntAtom,
    LinExpr,
    Or,
    PredSig,
    Term,
    UNIT,
    UnitConst,
    Var,
    adt,
    clause,
    term_subst,
    term_vars,
    AdtDecl,
    Ctor,
    TRUE,
)


# ---------------------------------------------------------------------------
# unification


class UnifyResult:
    """A substitution plus residual integer equations (LinExpr = 0)."""

    def __init__(self) -> None:
        self.sub: dict[str, Term] = {}
        self.int_eqs: list[LinExpr] = []

    def apply(self, t: Term) -> Term:
        return term_subst(t, self.sub)

    def bind(self, name: str, t: Term) -> None:
        t = term_subst(t, self.sub)
        for k in list(self.sub):
            self.sub[k] = term_subst(self.sub[k], {name: t})
        self.int_eqs = [e.subst({name: t}) for e in self.int_eqs]
        self.sub[name] = t


def unify(pairs: Sequence[tuple[Term, Term]]) -> Optional[UnifyResult]:
    """Most general unifier of the term pairs, or None on clash.

    Integer pairs that cannot be solved by binding a single unit-coefficient
    variable are kept as residual linear equations rather than failed.
    """
    res = UnifyResult()
    work = list(pairs)
    while work:
        a, b = work.pop()
        a = res.apply(a)
        b = res.apply(b)
        if a == b:
            continue
        if isinstance(a, LinExpr) and isinstance(b, LinExpr):
            d = a - b
            if d.is_const:
                if d.const != 0:
                    return None
                continue
            solved = False
            for v, c in d.coeffs:
                if c in (1, -1):
                    rest = (d - LinExpr.var(v, c)).scale(-c)
                    res.bind(v, rest)
                    solved = True
                    break
            if not solved:
                res.int_eqs.append(d)
            continue
        if isinstance(a, Var):
            if any(v.name == a.name for v in term_vars(b)):
                return None  # occurs check
            res.bind(a.name, b)
            continue
        if isinstance(b, Var):
            if any(v.name == b.name for v in term_vars(a)):
                return None
            res.bind(b.name, a)
            continue
        if isinstance(a, CtorTerm) and isinstance(b, CtorTerm):
            if a.adt != b.adt or a.ctor != b.ctor:
                return None
            work.extend(zip(a.args, b.args))
            continue
        if isinstance(a, BoolConst) and isinstance(b, BoolConst):
            if a.value != b.value:
                return None
            continue
        if isinstance(a, UnitConst) and isinstance(b, UnitConst):
            continue
        return None
    return res


def unify_atoms(a: Atom, b: Atom) -> Optional[UnifyResult]:
    if a.pred != b.pred or len(a.args) != len(b.args) or a.qvars or b.qvars:
        return None
    return unify(list(zip(a.args, b.args)))


# ---------------------------------------------------------------------------
# structural matching up to renaming


class _Bij:
    __slots__ = ("fwd", "bwd")

    def __init__(self, fwd: Optional[dict] = None, bwd: Optional[dict] = None):
        self.fwd = fwd or {}
        self.bwd = bwd or {}

    def extend(self, a: str, b: str) -> Optional["_Bij"]:
        if a in self.fwd:
            return self if self.fwd[a] == b else None
        if b in self.bwd:
            return None
        fwd = dict(self.fwd)
        bwd = dict(self.bwd)
        fwd[a] = b
        bwd[b] = a
        return _Bij(fwd, bwd)


class _State:
    __slots__ = ("vars", "preds", "ctors", "map_preds")

    def __init__(self, vars: _Bij, preds: _Bij, ctors: _Bij, map_preds: bool):
        self.vars = vars
        self.preds = preds
        self.ctors = ctors
        self.map_preds = map_preds

    def with_vars(self, v: _Bij) -> "_State":
        return _State(v, self.preds, self.ctors, self.map_preds)

    def pred_ok(self, a: str, b: str) -> Optional["_State"]:
        if not self.map_preds:
            return self if a == b else None
        p = self.preds.extend(a, b)
        if p is None:
            return None
        return _State(self.vars, p, self.ctors, self.map_preds)

    def ctor_ok(self, a: str, b: str) -> Optional["_State"]:
        if not self.map_preds:
            return self if a == b else None
        c = self.ctors.extend(a, b)
        if c is None:
            return None
        return _State(self.vars, self.preds, c, self.map_preds)


def _match_var(a: str, b: str, st: _State) -> Iterator[_State]:
    v = st.vars.extend(a, b)
    if v is not None:
        yield st.with_vars(v)


def _match_lin(a: LinExpr, b: LinExpr, st: _State) -> Iterator[_State]:
    if a.const != b.const or len(a.coeffs) != len(b.coeffs):
        return
    items_a = list(a.coeffs)
    items_b = list(b.coeffs)

    def go(i: int, st: _State, used: frozenset[int]) -> Iterator[_State]:
        if i == len(items_a):
            yield st
            return
        va, ca = items_a[i]
        for j, (vb, cb) in enumerate(items_b):
            if j in used or cb != ca:
                continue
            for st2 in _match_var(va, vb, st):
                yield from go(i + 1, st2, used | {j})

    yield from go(0, st, frozenset())


def _match_term(a: Term, b: Term, st: _State) -> Iterator[_State]:
    if isinstance(a, LinExpr) and isinstance(b, LinExpr):
        yield from _match_lin(a, b, st)
    elif isinstance(a, Var) and isinstance(b, Var):
        if a.sort.kind == b.sort.kind and (
            a.sort.kind != "adt" or st.map_preds or a.sort == b.sort
        ):
            yield from _match_var(a.name, b.name, st)
    elif isinstance(a, BoolConst) and isinstance(b, BoolConst):
        if a.value == b.value:
            yield st
    elif isinstance(a, UnitConst) and isinstance(b, UnitConst):
        yield st
    elif isinstance(a, CtorTerm) and isinstance(b, CtorTerm):
        st2 = st.ctor_ok(a.ctor, b.ctor)
        if st2 is None or len(a.args) != len(b.args):
            return
        yield from _match_seq(list(zip(a.args, b.args)), st2)


def _match_seq(pairs: list[tuple[Term, Term]], st: _State) -> Iterator[_State]:
    if not pairs:
        yield st
        return
    a, b = pairs[0]
    for st2 in _match_term(a, b, st):
        yield from _match_seq(pairs[1:], st2)


def _match_formula(a: Formula, b: Formula, st: _State) -> Iterator[_State]:
    if isinstance(a, And) and isinstance(b, And):
        yield from _match_multiset(list(a.parts), list(b.parts), st)
    elif isinstance(a, Or) and isinstance(b, Or):
        yield from _match_multiset(list(a.parts), list(b.parts), st)
    elif isinstance(a, Iff) and isinstance(b, Iff):
        for st2 in _match_formula(a.lhs, b.lhs, st):
            yield from _match_formula(a.rhs, b.rhs, st2)
        for st2 in _match_formula(a.lhs, b.rhs, st):
            yield from _match_formula(a.rhs, b.lhs, st2)
    elif isinstance(a, IntAtom) and isinstance(b, IntAtom):
        if a.op == b.op:
            yield from _match_lin(a.expr, b.expr, st)
    elif isinstance(a, BoolAtom) and isinstance(b, BoolAtom):
        if a.positive == b.positive:
            yield from _match_term(a.term, b.term, st)
    elif isinstance(a, AdtEq) and isinstance(b, AdtEq):
        if a.positive == b.positive:
            for st2 in _match_term(a.lhs, b.lhs, st):
                yield from _match_term(a.rhs, b.rhs, st2)
            for st2 in _match_term(a.lhs, b.rhs, st):
                yield from _match_term(a.rhs, b.lhs, st2)


def _match_multiset(xs: list, ys: list, st: _State) -> Iterator[_State]:
    if len(xs) != len(ys):
        return
    if not xs:
        yield st
        return
    x = xs[0]
    for j, y in enumerate(ys):
        for st2 in _match_formula(x, y, st):
            yield from _match_multiset(xs[1:], ys[:j] + ys[j + 1 :], st2)


_QTAG = "!q{}"


def _close_qvars(a: Atom) -> Atom:
    if not a.qvars:
        return a
    sub = {q: LinExpr.var(_QTAG.format(i)) for i, q in enumerate(a.qvars)}
    return Atom(
        a.pred,
        tuple(term_subst(t, sub) for t in a.args),
        tuple(_QTAG.format(i) for i in range(len(a.qvars))),
    )


def _match_atom(a: Atom, b: Atom, st: _State) -> Iterator[_State]:
    if len(a.args) != len(b.args) or len(a.qvars) != len(b.qvars):
        return
    st2 = st.pred_ok(a.pred, b.pred)
    if st2 is None:
        return
    a = _close_qvars(a)
    b = _close_qvars(b)
    yield from _match_seq(list(zip(a.args, b.args)), st2)


def _match_atoms_multiset(
    xs: list[Atom], ys: list[Atom], st: _State
) -> Iterator[_State]:
    if len(xs) != len(ys):
        return
    if not xs:
        yield st
        return
    x = xs[0]
    for j, y in enumerate(ys):
        for st2 in _match_atom(x, y, st):
            yield from _match_atoms_multiset(xs[1:], ys[:j] + ys[j + 1 :], st2)


def _match_clause(a: Clause, b: Clause, st: _State) -> Iterator[_State]:
    st = st.with_vars(_Bij())  # variable namespaces are per-clause
    if (a.head is None) != (b.head is None):
        return
    heads: Iterator[_State]
    if a.head is None:
        heads = iter([st])
    else:
        heads = _match_atom(a.head, b.head, st)
    for st1 in heads:
        for st2 in _match_atoms_multiset(list(a.body), list(b.body), st1):
            yield from _match_formula(a.constraint, b.constraint, st2)


def clause_alpha_eq(a: Clause, b: Clause) -> bool:
    """Equality up to variable renaming (predicate names fixed)."""
    st = _State(_Bij(), _Bij(), _Bij(), map_preds=False)
    return next(_match_clause(a, b, st), None) is not None


def _clause_key(c: Clause) -> tuple:
    return (
        c.head is None,
        len(c.head.args) if c.head else -1,
        tuple(sorted(len(a.args) for a in c.body)),
    )


def _match_clauses_multiset(
    xs: list[Clause], ys: list[Clause], st: _State
) -> Iterator[_State]:
    if not xs:
        yield st
        return
    x = xs[0]
    kx = _clause_key(x)
    for j, y in enumerate(ys):
        if _clause_key(y) != kx:
            continue
        for st2 in _match_clause(x, y, st):
            yield from _match_clauses_multiset(xs[1:], ys[:j] + ys[j + 1 :], st2)


def systems_equivalent(
    a: HornSystem,
    b: HornSystem,
    *,
    map_preds: bool = True,
    ignore_unit: bool = False,
) -> bool:
    """Clause-set equality up to variable renaming, and (by default) up to a
    bijection on predicate/constructor names.  With ``ignore_unit`` both
    systems are first normalized by deleting Unit-sorted argument columns,
    which carry no information (the sort has one value)."""
    if ignore_unit:
        a = drop_unit_columns(a)
        b = drop_unit_columns(b)
    if len(a.clauses) != len(b.clauses):
        return False
    st = _State(_Bij(), _Bij(), _Bij(), map_preds=map_preds)
    return (
        next(_match_clauses_multiset(list(a.clauses), list(b.clauses), st), None)
        is not None
    )


def find_clause(s: HornSystem, c: Clause) -> Optional[int]:
    """Index of a clause alpha-equal to ``c``, or None."""
    for i, d in enumerate(s.clauses):
        if clause_alpha_eq(c, d):
            return i
    return None


# ---------------------------------------------------------------------------
# unit-column normalization


def drop_unit_columns(s: HornSystem) -> HornSystem:
    """Delete every Unit-sorted predicate argument and constructor field."""
    keep: dict[str, list[int]] = {}
    for sig in s.sigs:
        keep[sig.name] = [i for i, srt in enumerate(sig.sorts) if srt != UNIT]
    ctor_keep: dict[tuple[str, str], list[int]] = {}
    new_adts = []
    for decl in s.adts:
        ctors = []
        for ct in decl.ctors:
            idxs = [i for i, srt in enumerate(ct.fields) if srt != UNIT]
            ctor_keep[(decl.name, ct.name)] = idxs
            ctors.append(Ctor(ct.name, tuple(ct.fields[i] for i in idxs), ct.origin))
        new_adts.append(AdtDecl(decl.name, tuple(ctors)))

    def fix_term(t: Term) -> Term:
        if isinstance(t, CtorTerm):
            idxs = ctor_keep.get((t.adt, t.ctor))
            args = t.args if idxs is None else tuple(t.args[i] for i in idxs)
            return CtorTerm(t.adt, t.ctor, tuple(fix_term(x) for x in args))
        return t

    def fix_atom(a: Atom) -> Atom:
        idxs = keep.get(a.pred)
        args = a.args if idxs is None else tuple(a.args[i] for i in idxs)
        return Atom(a.pred, tuple(fix_term(t) for t in args), a.qvars)

    new_clauses = []
    for c in s.clauses:
        head = fix_atom(c.head) if c.head is not None else None
        new_clauses.append(clause([fix_atom(a) for a in c.body], c.constraint, head))
    new_sigs = tuple(
        PredSig(sig.name, tuple(sig.sorts[i] for i in keep[sig.name]))
        for sig in s.sigs
    )
    return HornSystem(tuple(new_adts), new_sigs, tuple(new_clauses), s.provenance, ())
