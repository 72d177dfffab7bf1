"""Monomorphic type inference and A-normalization for the surface language.

Inference is unification-based with no let-polymorphism: each top-level
binding gets exactly one type, so a binding used at two incompatible types
is an error.  Normalization names every call result and every ``*`` oracle
so the encoder sees calls with atomic arguments only.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .syntax import (
    App,
    Arith,
    Assert,
    Binding,
    BoolLit,
    BoolOp,
    Cmp,
    Expr,
    If,
    IntLit,
    Let,
    Name,
    Nondet,
    Not,
    Oracle,
    Program,
    SourceError,
    TArrow,
    TBool,
    TInt,
    TUnit,
    TVar,
    T_BOOL,
    T_INT,
    T_UNIT,
    TopAssert,
    Type,
    UnitLit,
)


class TypeInferenceError(SourceError):
    pass


def resolve(t: Type) -> Type:
    while isinstance(t, TVar) and t.ref is not None:
        t = t.ref
    return t


def _occurs(v: TVar, t: Type) -> bool:
    t = resolve(t)
    if t is v:
        return True
    if isinstance(t, TArrow):
        return _occurs(v, t.dom) or _occurs(v, t.cod)
    return False


def unify_types(a: Type, b: Type, pos: tuple) -> None:
    a = resolve(a)
    b = resolve(b)
    if a is b or a == b:
        return
    if isinstance(a, TVar):
        if _occurs(a, b):
            raise TypeInferenceError(f"occurs check: 't{a.id} in {b}", *pos)
        a.ref = b
        return
    if isinstance(b, TVar):
        unify_types(b, a, pos)
        return
    if isinstance(a, TArrow) and isinstance(b, TArrow):
        unify_types(a.dom, b.dom, pos)
        unify_types(a.cod, b.cod, pos)
        return
    raise TypeInferenceError(f"type mismatch: {a} vs {b}", *pos)


def zonk(t: Type, pos: tuple) -> Type:
    t = resolve(t)
    if isinstance(t, TVar):
        raise TypeInferenceError(
            "unresolved type (the language is monomorphic; annotate by use)", *pos
        )
    if isinstance(t, TArrow):
        return TArrow(zonk(t.dom, pos), zonk(t.cod, pos))
    return t


def infer_types(prog: Program) -> Program:
    """Annotate every binder and subexpression with its monomorphic type."""
    counter = [0]

    def fresh() -> TVar:
        counter[0] += 1
        return TVar(counter[0])

    env: dict[str, Type] = {}
    for b in prog.bindings:
        b.param_types = [fresh() for _ in b.params]
        b.result_type = fresh()
        env[b.name] = b.fn_type()

    def check(e: Expr, scope: dict[str, Type]) -> Type:
        if isinstance(e, IntLit):
            e.ty = T_INT
        elif isinstance(e, BoolLit):
            e.ty = T_BOOL
        elif isinstance(e, UnitLit):
            e.ty = T_UNIT
        elif isinstance(e, (Nondet, Oracle)):
            e.ty = T_BOOL
        elif isinstance(e, Name):
            e.ty = scope.get(e.name) or env[e.name]
        elif isinstance(e, Arith):
            unify_types(check(e.lhs, scope), T_INT, e.pos)
            unify_types(check(e.rhs, scope), T_INT, e.pos)
            e.ty = T_INT
        elif isinstance(e, Cmp):
            unify_types(check(e.lhs, scope), T_INT, e.pos)
            unify_types(check(e.rhs, scope), T_INT, e.pos)
            e.ty = T_BOOL
        elif isinstance(e, BoolOp):
            unify_types(check(e.lhs, scope), T_BOOL, e.pos)
            unify_types(check(e.rhs, scope), T_BOOL, e.pos)
            e.ty = T_BOOL
        elif isinstance(e, Not):
            unify_types(check(e.arg, scope), T_BOOL, e.pos)
            e.ty = T_BOOL
        elif isinstance(e, If):
            unify_types(check(e.cond, scope), T_BOOL, e.cond.pos)
            t1 = check(e.then, scope)
            t2 = check(e.els, scope)
            unify_types(t1, t2, e.pos)
            e.ty = t1
        elif isinstance(e, App):
            tf = check(e.fn, scope)
            ta = check(e.arg, scope)
            out = fresh()
            unify_types(tf, TArrow(ta, out), e.pos)
            e.ty = out
        elif isinstance(e, Assert):
            unify_types(check(e.arg, scope), T_BOOL, e.pos)
            e.ty = T_UNIT
        elif isinstance(e, Let):
            t = check(e.rhs, scope)
            e.ty = check(e.body, {**scope, e.name: t})
        else:
            raise TypeInferenceError(f"cannot type {e!r}", *e.pos)
        return e.ty

    for b in prog.bindings:
        scope = dict(zip(b.params, b.param_types))
        unify_types(check(b.body, scope), b.result_type, b.pos)
    for a in prog.asserts:
        frees = {n: fresh() for n, _ in a.free_vars}
        unify_types(check(a.expr, frees), T_BOOL, a.pos)
        a.free_vars = [(n, frees[n]) for n in frees]

    def zonk_expr(e: Expr) -> None:
        e.ty = zonk(e.ty, e.pos)
        for f in ("lhs", "rhs", "cond", "then", "els", "fn", "arg", "body"):
            sub = getattr(e, f, None)
            if isinstance(sub, Expr):
                zonk_expr(sub)

    for b in prog.bindings:
        b.param_types = [zonk(t, b.pos) for t in b.param_types]
        b.result_type = zonk(b.result_type, b.pos)
        zonk_expr(b.body)
    for a in prog.asserts:
        a.free_vars = [(n, zonk(t, a.pos)) for n, t in a.free_vars]
        zonk_expr(a.expr)
    prog.typed = True
    return prog


# ---------------------------------------------------------------------------
# normalization


def app_spine(e: Expr) -> tuple[Expr, list[Expr]]:
    """Decompose nested applications into (head, arguments)."""
    args: list[Expr] = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fn
    return e, list(reversed(args))


def rebuild_apps(head: Expr, args: list[Expr], pos: tuple) -> Expr:
    out = head
    for a in args:
        t = resolve(out.ty)
        cod = t.cod if isinstance(t, TArrow) else None
        out = App(out, a, ty=cod, pos=pos)
    return out


def is_closure_value(e: Expr, arities: dict[str, int], scope: set[str]) -> bool:
    """A (possibly zero-argument) partial application of a known function:
    a closure value rather than a call."""
    head, args = app_spine(e)
    if not isinstance(head, Name) or head.name in scope:
        return False
    n = arities.get(head.name)
    return n is not None and len(args) < n


def normalize(prog: Program) -> Program:
    """Name call results and oracles so call sites have atomic arguments.

    The result uses internal ``Let`` nodes; temporaries are named ``$k`` and
    oracle booleans ``*k``, both numbered per binding, so the output is
    deterministic and the transformation idempotent.
    """
    if not prog.typed:
        raise TypeInferenceError("normalize requires a typed program", 0, 0)
    arities = {b.name: b.arity for b in prog.bindings}

    def norm_body(e: Expr, scope: set[str]) -> Expr:
        temps = [0]
        oracles = [0]

        def fresh_temp() -> str:
            temps[0] += 1
            return f"${temps[0]}"

        def fresh_oracle() -> str:
            oracles[0] += 1
            return f"*{oracles[0]}"

        def wrap(binds: list[tuple[str, Expr]], tail: Expr) -> Expr:
            for name, rhs in reversed(binds):
                tail = Let(name, rhs, tail, ty=tail.ty, pos=rhs.pos)
            return tail

        def atomize(e: Expr, binds: list[tuple[str, Expr]]) -> Expr:
            """Reduce ``e`` to an atomic expression, appending bindings for
            any evaluation it contains."""
            if isinstance(e, Nondet):
                return Oracle(fresh_oracle(), ty=T_BOOL, pos=e.pos)
            if isinstance(e, (IntLit, BoolLit, UnitLit, Name, Oracle)):
                return e
            if isinstance(e, (Arith, Cmp, BoolOp)):
                lhs = atomize(e.lhs, binds)
                return replace(e, lhs=lhs, rhs=atomize(e.rhs, binds))
            if isinstance(e, Not):
                return replace(e, arg=atomize(e.arg, binds))
            if isinstance(e, App) and is_closure_value(e, arities, scope):
                head, args = app_spine(e)
                return rebuild_apps(
                    head, [atomize(a, binds) for a in args], e.pos
                )
            name = fresh_temp()
            binds.append((name, norm_tail(e)))
            return Name(name, ty=e.ty, pos=e.pos)

        def norm_tail(e: Expr) -> Expr:
            """Normalize an expression kept in evaluation position."""
            if isinstance(e, App) and not is_closure_value(e, arities, scope):
                binds: list[tuple[str, Expr]] = []
                head, args = app_spine(e)
                head = atomize(head, binds)
                args = [atomize(a, binds) for a in args]
                return wrap(binds, rebuild_apps(head, args, e.pos))
            if isinstance(e, Assert):
                binds = []
                arg = atomize(e.arg, binds)
                return wrap(binds, Assert(arg, ty=T_UNIT, pos=e.pos))
            if isinstance(e, If):
                binds = []
                cond = atomize(e.cond, binds)
                out = If(cond, norm_tail(e.then), norm_tail(e.els), ty=e.ty, pos=e.pos)
                return wrap(binds, out)
            if isinstance(e, Let):
                return Let(e.name, norm_tail(e.rhs), norm_tail(e.body), ty=e.ty, pos=e.pos)
            binds = []
            out = atomize(e, binds)
            return wrap(binds, out)

        return norm_tail(e)

    for b in prog.bindings:
        b.body = norm_body(b.body, set(b.params))
    for a in prog.asserts:
        a.expr = norm_body(a.expr, {n for n, _ in a.free_vars})
    return prog
