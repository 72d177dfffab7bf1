"""Defunctionalization: typed programs to constrained Horn clauses.

Closures become algebraic data types (one constructor per partial
application shape), higher-order calls go through a per-type evaluator
relation, and each function becomes a relation over its arguments, its
result, and (in programs with expression-level asserts) a success flag.
``specialize`` then eliminates the flags by success/failure case splitting,
slices to the assertion, unfolds single-constructor closures and drops
the information-free columns, reproducing the economical clause form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from . import syntax as S
from .core import (
    AdtDecl,
    Atom,
    BOOL,
    BoolAtom,
    BoolConst,
    Clause,
    Ctor,
    CtorTerm,
    FALSE,
    Formula,
    HornError,
    HornSystem,
    Iff,
    INT,
    IntAtom,
    LinExpr,
    PredInfo,
    PredSig,
    Sort,
    TRUE,
    Term,
    UNIT,
    UNIT_VALUE,
    UnitConst,
    Var,
    adt,
    bool_atom,
    clause,
    conj,
    disj,
    fsubst,
    fvars,
    int_eq,
    int_ge,
    int_gt,
    int_le,
    int_lt,
    neg,
    prov,
    term_subst,
    term_vars,
    var_term,
)
from .match import unify
from .syntax import (
    App,
    Arith,
    Assert,
    Binding,
    BoolLit,
    BoolOp,
    Cmp,
    If,
    IntLit,
    Let,
    Name,
    Not,
    Oracle,
    Program,
    TArrow,
    TBool,
    TInt,
    TUnit,
    Type,
    UnitLit,
)
from .typecheck import app_spine, infer_types, is_closure_value, normalize


class EncodeError(HornError):
    pass


@dataclass(frozen=True)
class EncodingOptions:
    mode: str = "specialized"  # "canonical" | "specialized"
    elide_ok: bool = True
    elide_singleton_closures: bool = True
    drop_unused_args: bool = True


EV_PREFIX = "Ev_"


# ---------------------------------------------------------------------------
# closure collection


def _type_key(t: Type) -> str:
    return str(t)


def _arrow_parts(t: Type) -> tuple[Type, Type]:
    assert isinstance(t, TArrow)
    return t.dom, t.cod


@dataclass
class _ClosureTable:
    adts: list[AdtDecl]
    by_type: dict[str, str]  # arrow type key -> adt name
    ctor_of: dict[tuple[str, int], tuple[str, str]]  # (fn, nargs) -> (adt, ctor)

    def sort_of_type(self, t: Type) -> Sort:
        if isinstance(t, TInt):
            return INT
        if isinstance(t, TBool):
            return BOOL
        if isinstance(t, TUnit):
            return UNIT
        key = _type_key(t)
        if key not in self.by_type:
            raise EncodeError(f"no closures of type {t} are ever constructed")
        return adt(self.by_type[key])


def _scan_closure_sites(prog: Program) -> list[tuple[str, int, object, int]]:
    """All partial-application shapes: (fn, nargs, residual type, binding idx)."""
    arities = {b.name: b.arity for b in prog.bindings}
    index = {b.name: i for i, b in enumerate(prog.bindings)}
    sites: dict[tuple[str, int], tuple[object, int]] = {}

    def note(fn: str, k: int, ty: Type) -> None:
        key = (fn, k)
        if key not in sites:
            sites[key] = (ty, index[fn])

    def scan(e: S.Expr, scope: set[str]) -> None:
        if isinstance(e, Name):
            if e.name not in scope and e.name in arities and arities[e.name] > 0:
                note(e.name, 0, e.ty)
            return
        if isinstance(e, App):
            head, args = app_spine(e)
            if (
                isinstance(head, Name)
                and head.name not in scope
                and head.name in arities
            ):
                n = arities[head.name]
                if len(args) < n:
                    note(head.name, len(args), e.ty)
            else:
                scan(head, scope)
            for a in args:
                scan(a, scope)
            return
        if isinstance(e, Let):
            scan(e.rhs, scope)
            scan(e.body, scope | {e.name})
            return
        for f in ("lhs", "rhs", "cond", "then", "els", "fn", "arg", "body"):
            sub = getattr(e, f, None)
            if isinstance(sub, S.Expr):
                scan(sub, scope)

    for b in prog.bindings:
        scan(b.body, set(b.params))
    for a in prog.asserts:
        scan(a.expr, {n for n, _ in a.free_vars})
    return [(fn, k, ty, idx) for (fn, k), (ty, idx) in sites.items()]


def collect_closures(prog: Program) -> list[AdtDecl]:
    """One ADT per arrow type used as a value, with a constructor per
    partial-application shape flowing into it."""
    if not prog.typed:
        raise EncodeError("collect_closures requires a typed program")
    sites = _scan_closure_sites(prog)
    groups: dict[str, list[tuple[str, int, object, int]]] = {}
    for fn, k, ty, idx in sites:
        groups.setdefault(_type_key(ty), []).append((fn, k, ty, idx))
    ordered = sorted(groups.items(), key=lambda kv: min(s[3] for s in kv[1]))
    names: dict[str, str] = {}
    if len(ordered) == 1:
        names[ordered[0][0]] = "clo"
    else:
        for i, (key, _) in enumerate(ordered):
            names[key] = f"clo{i + 1}"
    table = _ClosureTable([], names, {})
    bindings = {b.name: b for b in prog.bindings}
    decls: list[AdtDecl] = []
    for key, group in ordered:
        ctors: list[Ctor] = []
        for fn, k, _, _ in sorted(group, key=lambda s: (s[0], s[1])):
            b = bindings[fn]
            fields = tuple(table.sort_of_type(t) for t in b.param_types[:k])
            cname = fn if _shape_unique(sites, fn) else f"{fn}{k}"
            ctors.append(Ctor(cname, fields, origin=fn))
            table.ctor_of[(fn, k)] = (names[key], cname)
        decls.append(AdtDecl(names[key], tuple(ctors)))
    table.adts = decls
    prog.__dict__["_closure_table"] = table  # cached for the encoder
    return decls


def _shape_unique(sites: list, fn: str) -> bool:
    return sum(1 for s in sites if s[0] == fn) == 1


def _closure_table(prog: Program) -> _ClosureTable:
    table = prog.__dict__.get("_closure_table")
    if table is None:
        collect_closures(prog)
        table = prog.__dict__["_closure_table"]
    return table


# ---------------------------------------------------------------------------
# canonical encoding


class _NameGen:
    def __init__(self, taken: set[str]):
        self.taken = set(taken)

    def fresh(self, base: str) -> str:
        if base not in self.taken:
            self.taken.add(base)
            return base
        i = 1
        while f"{base}{i}" in self.taken:
            i += 1
        self.taken.add(f"{base}{i}")
        return f"{base}{i}"


@dataclass
class _Path:
    """One control path through a binding body."""

    atoms: list[Atom]
    guards: list[Formula]
    conds: list[Formula]  # assert conditions met along the path
    okvars: list[str]  # success flags of the calls made
    env: dict[str, Term]
    names: _NameGen

    def fork(self) -> "_Path":
        return _Path(
            list(self.atoms),
            list(self.guards),
            list(self.conds),
            list(self.okvars),
            dict(self.env),
            self.names,  # shared: fresh names must stay unique clause-wide
        )


class _Encoder:
    def __init__(self, prog: Program):
        self.prog = prog
        self.table = _closure_table(prog)
        self.bindings = {b.name: b for b in prog.bindings}
        self.threading = any(_has_assert(b.body) for b in prog.bindings)
        self.sigs: list[PredSig] = []
        self.meta: list[tuple[str, PredInfo]] = []
        self.clauses: list[Clause] = []

    def sort_of(self, t: Type) -> Sort:
        return self.table.sort_of_type(t)

    def ev_name(self, adt_name: str) -> str:
        return EV_PREFIX + adt_name

    def run(self) -> HornSystem:
        for decl in self.table.adts:
            self.declare_evaluator(decl)
        for b in self.prog.bindings:
            self.declare_function(b)
        for decl in self.table.adts:
            for ctor in decl.ctors:
                self.clauses.append(self.evaluator_clause(decl, ctor))
        for b in self.prog.bindings:
            self.encode_binding(b)
        for a in self.prog.asserts:
            self.encode_top_assert(a)
        if self.threading:
            self.entry_goal()
        system = HornSystem(
            adts=tuple(self.table.adts),
            sigs=tuple(self.sigs),
            clauses=tuple(self.clauses),
            provenance=(prov("encode", mode="canonical"),),
            meta=tuple(self.meta),
        )
        return system

    # --- declarations

    def declare_function(self, b: Binding) -> None:
        sorts = [self.sort_of(t) for t in b.param_types]
        sorts.append(self.sort_of(b.result_type))
        info = PredInfo(kind="func", res=len(sorts) - 1, fn=b.name)
        if self.threading:
            sorts.append(BOOL)
            info = replace(info, ok=len(sorts) - 1)
        self.sigs.append(PredSig(b.name, tuple(sorts)))
        self.meta.append((b.name, info))

    def declare_evaluator(self, decl: AdtDecl) -> None:
        dom, cod = self.ev_signature(decl)
        sorts = [adt(decl.name), dom, cod]
        info = PredInfo(kind="eval", res=2, fn=decl.name)
        if self.threading:
            sorts.append(BOOL)
            info = replace(info, ok=3)
        self.sigs.append(PredSig(self.ev_name(decl.name), tuple(sorts)))
        self.meta.append((self.ev_name(decl.name), info))

    def ev_signature(self, decl: AdtDecl) -> tuple[Sort, Sort]:
        fn = self.bindings[decl.ctors[0].origin]
        k = len(decl.ctors[0].fields)
        arrow = fn.fn_type()
        for _ in range(k):
            arrow = arrow.cod  # type: ignore[union-attr]
        return self.sort_of(arrow.dom), self.sort_of(arrow.cod)  # type: ignore[union-attr]

    # --- evaluator clauses

    def evaluator_clause(self, decl: AdtDecl, ctor: Ctor) -> Clause:
        b = self.bindings[ctor.origin]
        k = len(ctor.fields)
        names = _NameGen(set())
        caps = [
            Var(names.fresh("x" if len(ctor.fields) == 1 else f"x{i + 1}"), srt)
            for i, srt in enumerate(ctor.fields)
        ]
        dom, _ = self.ev_signature(decl)
        arg: Term
        if dom == UNIT:
            arg = UNIT_VALUE
        else:
            arg = var_term(Var(names.fresh("y"), dom))
        closure = CtorTerm(decl.name, ctor.name, tuple(var_term(v) for v in caps))
        if k + 1 != b.arity:
            # applying this shape yields the next partial shape, not a call
            nxt = self.table.ctor_of.get((ctor.origin, k + 1))
            if nxt is None:
                raise EncodeError(
                    f"partial application of {ctor.origin} at {k + 1} args "
                    "is never constructed"
                )
            res = CtorTerm(nxt[0], nxt[1], tuple(var_term(v) for v in caps) + (arg,))
            head_args: list[Term] = [closure, arg, res]
            if self.threading:
                head_args.append(BoolConst(True))
            return clause([], TRUE, Atom(self.ev_name(decl.name), tuple(head_args)))
        resvar = var_term(Var(names.fresh("r"), self.sort_of(b.result_type)))
        call_args = [var_term(v) for v in caps] + [arg, resvar]
        head_args = [closure, arg, resvar]
        if self.threading:
            ok = var_term(Var(names.fresh("ok"), BOOL))
            call_args.append(ok)
            head_args.append(ok)
        body = Atom(b.name, tuple(call_args))
        return clause([body], TRUE, Atom(self.ev_name(decl.name), tuple(head_args)))

    # --- expression encoding

    def term_of(self, e: S.Expr, path: _Path, scope: set[str]) -> Term:
        if isinstance(e, IntLit):
            return LinExpr.of(e.value)
        if isinstance(e, BoolLit):
            return BoolConst(e.value)
        if isinstance(e, UnitLit):
            return UNIT_VALUE
        if isinstance(e, Oracle):
            return var_term(self.oracle_var(e, path))
        if isinstance(e, Name):
            if e.name in path.env:
                return path.env[e.name]
            if e.name in self.bindings and e.name not in scope:
                return self.closure_term(e, [], path, scope)
            raise EncodeError(f"unbound name {e.name} at {e.pos}")
        if isinstance(e, Arith):
            lhs = self.term_of(e.lhs, path, scope)
            rhs = self.term_of(e.rhs, path, scope)
            assert isinstance(lhs, LinExpr) and isinstance(rhs, LinExpr)
            return lhs + rhs if e.op == "+" else lhs - rhs
        if isinstance(e, App):
            head, args = app_spine(e)
            return self.closure_term(head, args, path, scope)
        if isinstance(e, (Cmp, BoolOp, Not)):
            b = Var(path.names.fresh("t"), BOOL)
            path.guards.append(Iff(BoolAtom(b), self.formula_of(e, path, scope)))
            return b
        raise EncodeError(f"not a value expression: {e!r}")

    def closure_term(self, head: S.Expr, args: list[S.Expr], path: _Path, scope: set[str]) -> Term:
        assert isinstance(head, Name)
        key = (head.name, len(args))
        if key not in self.table.ctor_of:
            raise EncodeError(f"unknown closure shape {key}")
        aname, cname = self.table.ctor_of[key]
        return CtorTerm(
            aname, cname, tuple(self.term_of(a, path, scope) for a in args)
        )

    def formula_of(self, e: S.Expr, path: _Path, scope: set[str]) -> Formula:
        if isinstance(e, BoolLit):
            return TRUE if e.value else FALSE
        if isinstance(e, (Name, Oracle)):
            return bool_atom(self.term_of(e, path, scope))
        if isinstance(e, Not):
            return neg(self.formula_of(e.arg, path, scope))
        if isinstance(e, BoolOp):
            lhs = self.formula_of(e.lhs, path, scope)
            rhs = self.formula_of(e.rhs, path, scope)
            if e.op == "&&":
                return conj([lhs, rhs])
            if e.op == "||":
                return disj([lhs, rhs])
            return disj([neg(lhs), rhs])  # =>
        if isinstance(e, Cmp):
            lhs = self.term_of(e.lhs, path, scope)
            rhs = self.term_of(e.rhs, path, scope)
            assert isinstance(lhs, LinExpr) and isinstance(rhs, LinExpr)
            op = {
                "<": int_lt,
                "<=": int_le,
                ">": int_gt,
                ">=": int_ge,
                "=": int_eq,
            }[e.op]
            return op(lhs, rhs)
        raise EncodeError(f"not a boolean expression: {e!r}")

    def oracle_var(self, e: Oracle, path: _Path) -> Var:
        name = "b" + e.name[1:]  # "*1" -> "b1"
        if name not in path.env:
            path.env[name] = var_term(Var(path.names.fresh(name), BOOL))
        t = path.env[name]
        assert isinstance(t, Var)
        return t

    def emit_call(self, e: S.Expr, path: _Path, scope: set[str], res_base: str) -> Term:
        """Encode a (possibly over-applied or higher-order) call; returns the
        result term after appending the body atoms."""
        head, args = app_spine(e)
        direct_n = 0
        if (
            isinstance(head, Name)
            and head.name not in scope
            and head.name not in path.env
            and head.name in self.bindings
        ):
            direct_n = self.bindings[head.name].arity
        arg_terms = [self.term_of(a, path, scope) for a in args]
        if direct_n > 0:
            b = self.bindings[head.name]
            current = self.apply_direct(b, arg_terms[:direct_n], path, res_base)
            rest = arg_terms[direct_n:]
        else:
            current = self.term_of(head, path, scope)
            rest = arg_terms
        for t in rest:
            current = self.apply_closure(current, t, path, res_base)
        return current

    def apply_direct(self, b: Binding, args: list[Term], path: _Path, res_base: str) -> Term:
        res = var_term(Var(path.names.fresh(res_base), self.sort_of(b.result_type)))
        call = args + [res]
        if self.threading:
            ok = path.names.fresh("ok")
            path.okvars.append(ok)
            call.append(var_term(Var(ok, BOOL)))
        path.atoms.append(Atom(b.name, tuple(call)))
        return res

    def apply_closure(self, closure: Term, arg: Term, path: _Path, res_base: str) -> Term:
        srt = _term_sort_name(closure)
        if srt is None:
            raise EncodeError("applying a non-closure value")
        decl = next(d for d in self.table.adts if d.name == srt)
        _, cod = self.ev_signature(decl)
        res = var_term(Var(path.names.fresh(res_base), cod))
        call = [closure, arg, res]
        if self.threading:
            ok = path.names.fresh("ok")
            path.okvars.append(ok)
            call.append(var_term(Var(ok, BOOL)))
        path.atoms.append(Atom(self.ev_name(decl.name), tuple(call)))
        return res

    def walk(
        self, e: S.Expr, path: _Path, scope: set[str], done: list[tuple[_Path, Term]]
    ) -> None:
        """Explore every control path of a normalized body, producing the
        completed paths with their result terms."""
        if isinstance(e, Let):
            if isinstance(e.rhs, If) or _contains_let(e.rhs):
                sub: list[tuple[_Path, Term]] = []
                self.walk(e.rhs, path, scope, sub)
                for p2, t in sub:
                    p2.env[e.name] = t
                    self.walk(e.body, p2, scope, done)
                return
            path.env[e.name] = self.eval_rhs(e.rhs, path, scope, e.name)
            self.walk(e.body, path, scope, done)
            return
        if isinstance(e, If):
            cond = self.formula_of(e.cond, path, scope)
            then_path = path.fork()
            then_path.guards.append(cond)
            self.walk(e.then, then_path, scope, done)
            else_path = path.fork()
            else_path.guards.append(neg(cond))
            self.walk(e.els, else_path, scope, done)
            return
        if isinstance(e, Assert):
            path.conds.append(self.formula_of(e.arg, path, scope))
            done.append((path, UNIT_VALUE))
            return
        if isinstance(e, App) and not is_closure_value(
            e, {b.name: b.arity for b in self.prog.bindings}, scope
        ):
            done.append((path, self.emit_call(e, path, scope, "r")))
            return
        done.append((path, self.term_of(e, path, scope)))

    def eval_rhs(self, e: S.Expr, path: _Path, scope: set[str], name: str) -> Term:
        if isinstance(e, Assert):
            path.conds.append(self.formula_of(e.arg, path, scope))
            return UNIT_VALUE
        if isinstance(e, App) and not is_closure_value(
            e, {b.name: b.arity for b in self.prog.bindings}, scope
        ):
            return self.emit_call(e, path, scope, "r")
        return self.term_of(e, path, scope)

    def encode_binding(self, b: Binding) -> None:
        scope = set(b.params)
        params = [Var(p, self.sort_of(t)) for p, t in zip(b.params, b.param_types)]
        names = _NameGen({p.name for p in params})
        env: dict[str, Term] = {p.name: var_term(p) for p in params}
        root = _Path([], [], [], [], env, names)
        done: list[tuple[_Path, Term]] = []
        self.walk(b.body, root, scope, done)
        for path, result in done:
            head_args: list[Term] = [var_term(p) for p in params] + [result]
            constraint = conj(path.guards)
            if self.threading:
                ok_term, ok_def = self.ok_definition(path)
                if ok_def is not None:
                    constraint = conj([constraint, ok_def])
                head_args.append(ok_term)
            self.clauses.append(
                clause(path.atoms, constraint, Atom(b.name, tuple(head_args)))
            )

    def ok_definition(self, path: _Path) -> tuple[Term, Optional[Formula]]:
        """Success-flag term for a path, plus its defining constraint.

        No asserts and no calls: the constant true.  A single call and no
        asserts: the callee's flag is reused.  Otherwise a fresh flag defined
        as the conjunction of the assert conditions and the callee flags."""
        flags = [Var(o, BOOL) for o in path.okvars]
        if not path.conds and not flags:
            return BoolConst(True), None
        if not path.conds and len(flags) == 1:
            return var_term(flags[0]), None
        ok = Var(path.names.fresh("ok"), BOOL)
        rhs = conj(list(path.conds) + [BoolAtom(f) for f in flags])
        return var_term(ok), Iff(BoolAtom(ok), rhs)

    def encode_top_assert(self, a: S.TopAssert) -> None:
        """A top-level assert yields a goal clause per control path: the
        calls made along the path (successfully, under partial correctness)
        plus the negated asserted condition imply false."""
        scope = {n for n, _ in a.free_vars}
        names = _NameGen(set(scope))
        env: dict[str, Term] = {
            n: var_term(Var(n, self.sort_of(t))) for n, t in a.free_vars
        }

        def go(e: S.Expr, path: _Path) -> None:
            if isinstance(e, Let):
                path.env[e.name] = self.eval_rhs(e.rhs, path, scope, e.name)
                go(e.body, path)
                return
            if isinstance(e, If):
                cond = self.formula_of(e.cond, path, scope)
                t = path.fork()
                t.guards.append(cond)
                go(e.then, t)
                f = path.fork()
                f.guards.append(neg(cond))
                go(e.els, f)
                return
            violated = neg(self.formula_of(e, path, scope))
            atoms = [self.force_success(at) for at in path.atoms]
            constraint = conj(list(path.guards) + [violated])
            if constraint == FALSE:
                return
            self.clauses.append(clause(atoms, constraint, None))

        go(a.expr, _Path([], [], [], [], env, names))

    def force_success(self, at: Atom) -> Atom:
        info = self.info_of(at.pred)
        if info.ok is None:
            return at
        args = list(at.args)
        args[info.ok] = BoolConst(True)
        return Atom(at.pred, tuple(args))

    def info_of(self, pred: str) -> PredInfo:
        for n, i in self.meta:
            if n == pred:
                return i
        return PredInfo()

    def entry_goal(self) -> None:
        entry = None
        for b in self.prog.bindings:
            if b.name == "main":
                entry = b
        if entry is None:
            entry = self.prog.bindings[-1]
        names = _NameGen(set())
        args: list[Term] = [
            var_term(Var(names.fresh(p), self.sort_of(t)))
            for p, t in zip(entry.params, entry.param_types)
        ]
        args.append(var_term(Var(names.fresh("r"), self.sort_of(entry.result_type))))
        args.append(BoolConst(False))
        self.clauses.append(clause([Atom(entry.name, tuple(args))], TRUE, None))


def _has_assert(e: S.Expr) -> bool:
    if isinstance(e, Assert):
        return True
    for f in ("lhs", "rhs", "cond", "then", "els", "fn", "arg", "body"):
        sub = getattr(e, f, None)
        if isinstance(sub, S.Expr) and _has_assert(sub):
            return True
    return False


def _contains_let(e: S.Expr) -> bool:
    if isinstance(e, Let):
        return True
    if isinstance(e, If):
        return _contains_let(e.then) or _contains_let(e.els) or _contains_let(e.cond)
    return False


def _term_sort_name(t: Term) -> Optional[str]:
    from .core import term_sort

    srt = term_sort(t)
    return srt.name if srt.kind == "adt" else None


def encode_canonical(prog: Program) -> HornSystem:
    """The systematic encoding: one relation per function over (arguments,
    result[, success flag]), an evaluator relation per closure type, one
    clause per control path, and a goal clause per safety obligation."""
    if not prog.typed:
        raise EncodeError("encode_canonical requires a typed, normalized program")
    return _Encoder(prog).run()


def encode(prog_or_source, options: EncodingOptions = EncodingOptions()) -> HornSystem:
    """Front-to-back convenience: parse/typecheck/normalize as needed, then
    encode canonically and, unless canonical mode is requested, specialize."""
    if isinstance(prog_or_source, str):
        from .syntax import parse

        prog = normalize(infer_types(parse(prog_or_source)))
    else:
        prog = prog_or_source
        if not prog.typed:
            prog = normalize(infer_types(prog))
    system = encode_canonical(prog)
    if options.mode == "canonical":
        return system
    return specialize(system, options)


# ---------------------------------------------------------------------------
# specialization

from .specialize import specialize, back_translate_model  # noqa: E402,F401
