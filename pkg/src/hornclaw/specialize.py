"""Specialization of canonical Horn encodings to the economical form.

The pipeline, each step satisfiability-preserving and logged for model
back-translation:

1. erase vacuous boolean guards (branch oracles used nowhere else);
2. split every flagged relation into a success relation (flag true) and a
   failure relation (flag false), partially evaluating the constraints;
3. prune relations with no derivable facts, then slice to the cone of
   influence of the goal clauses;
4. unfold single-constructor non-recursive closure ADTs everywhere they
   appear, resolving away evaluators (and their origin functions) whose
   dispatch was made trivial but still carries higher-order data;
5. drop Unit-sorted columns (the sort has one value) and, optionally,
   argument positions that are never read or constrained;
6. give surviving relations back their source names.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

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
    InterpCase,
    Interp,
    LinExpr,
    Model,
    Pattern,
    PredInfo,
    PredSig,
    Sort,
    TRUE,
    Term,
    UNIT,
    Var,
    adt,
    bool_atom,
    clause,
    clause_subst,
    conj,
    disj,
    eq0,
    fsubst,
    fvars,
    neg,
    prov,
    rename_apart,
    term_subst,
    term_vars,
    var_term,
)
from .match import unify


def specialize(s: HornSystem, options=None) -> HornSystem:
    from .encoder import EncodingOptions

    opts = options or EncodingOptions()
    out = _erase_free_bool_guards(s)
    if opts.elide_ok and any(i.ok is not None for _, i in out.meta):
        out = _ok_split(out)
        out = _prune_empty(out)
        out = _slice_to_goals(out)
    if opts.elide_singleton_closures:
        out = _unfold_singleton_adts(out)
    out = _drop_unit_columns(out)
    if opts.drop_unused_args:
        from .transforms import remove_unused_args

        out = remove_unused_args(out)
    out = _rename_variants(out)
    return out


# ---------------------------------------------------------------------------
# step 1: vacuous guards


def _clause_var_uses(c: Clause) -> dict[str, int]:
    uses: dict[str, int] = {}

    def count_term(t: Term) -> None:
        for v in term_vars(t):
            uses[v.name] = uses.get(v.name, 0) + 1

    for a in c.atoms():
        for t in a.args:
            count_term(t)
    for v in fvars(c.constraint):
        uses[v.name] = uses.get(v.name, 0) + 1
    return uses


def _erase_free_bool_guards(s: HornSystem) -> HornSystem:
    """Drop top-level boolean literals over variables used nowhere else
    (branch oracles): a universally quantified free literal is vacuous."""
    changed = False
    out = []
    for c in s.clauses:
        if c.constraint in (TRUE, FALSE):
            out.append(c)
            continue
        parts = (
            list(c.constraint.parts)
            if isinstance(c.constraint, And)
            else [c.constraint]
        )
        uses = _clause_var_uses(c)
        kept = [
            p
            for p in parts
            if not (
                isinstance(p, BoolAtom)
                and isinstance(p.term, Var)
                and uses.get(p.term.name, 0) == 1
            )
        ]
        if len(kept) == len(parts):
            out.append(c)
        else:
            changed = True
            out.append(clause(c.body, conj(kept), c.head))
    if not changed:
        return s
    return s.with_(clauses=tuple(out)).logged(prov("erase_guards"))


# ---------------------------------------------------------------------------
# step 2: success/failure splitting


def _variant(name: str, ok: bool) -> str:
    return f"{name}!{'ok' if ok else 'err'}"


def _ok_split(s: HornSystem) -> HornSystem:
    flagged = {n: i for n, i in s.meta if i.ok is not None}
    sigs: list[PredSig] = []
    meta: list[tuple[str, PredInfo]] = []
    payload: list[tuple[str, tuple[Sort, ...], int]] = []
    for sig in s.sigs:
        info = dict(s.meta).get(sig.name, PredInfo())
        if sig.name in flagged:
            k = flagged[sig.name].ok
            reduced = tuple(t for i, t in enumerate(sig.sorts) if i != k)
            for okval in (True, False):
                sigs.append(PredSig(_variant(sig.name, okval), reduced))
                meta.append(
                    (
                        _variant(sig.name, okval),
                        replace(info, ok=None),
                    )
                )
            payload.append((sig.name, sig.sorts, k))
        else:
            sigs.append(sig)
            meta.append((sig.name, info))

    def strip(a: Atom) -> Atom:
        if a.pred not in flagged:
            return a
        k = flagged[a.pred].ok
        t = a.args[k]
        if not isinstance(t, BoolConst):
            raise HornError(f"unresolved flag at {a}")
        args = tuple(x for i, x in enumerate(a.args) if i != k)
        return Atom(_variant(a.pred, t.value), args)

    new_clauses: list[Clause] = []
    for c in s.clauses:
        okvars: list[str] = []
        for a in c.atoms():
            if a.pred in flagged:
                t = a.args[flagged[a.pred].ok]
                if isinstance(t, Var) and t.name not in okvars:
                    okvars.append(t.name)
        combos: list[dict[str, Term]] = [{}]
        for v in okvars:
            combos = [
                {**m, v: BoolConst(val)} for m in combos for val in (True, False)
            ]
        for sub in combos:
            c2 = clause_subst(c, sub) if sub else c
            if c2.constraint == FALSE:
                continue
            head = strip(c2.head) if c2.head is not None else None
            new_clauses.append(
                clause([strip(a) for a in c2.body], c2.constraint, head)
            )
    return HornSystem(
        s.adts,
        tuple(sigs),
        tuple(new_clauses),
        s.provenance + (prov("ok_split", preds=tuple(payload)),),
        tuple(meta),
    )


# ---------------------------------------------------------------------------
# step 3: pruning and slicing


def _remove_preds(s: HornSystem, gone: set[str], step: str) -> HornSystem:
    if not gone:
        return s
    sigs = tuple(p for p in s.sigs if p.name not in gone)
    removed = tuple(p for p in s.sigs if p.name in gone)
    meta = tuple((n, i) for n, i in s.meta if n not in gone)
    clauses = tuple(
        c
        for c in s.clauses
        if all(a.pred not in gone for a in c.atoms())
    )
    return HornSystem(
        s.adts,
        sigs,
        clauses,
        s.provenance + (prov(step, sigs=removed),),
        meta,
    )


def _prune_empty(s: HornSystem) -> HornSystem:
    """Remove predicates with no defining clauses (their atoms can never
    hold in the least model), to a fixpoint."""
    current = s
    while True:
        defined = {c.head.pred for c in current.clauses if c.head is not None}
        gone = {p.name for p in current.sigs if p.name not in defined}
        if not gone:
            return current
        current = _remove_preds(current, gone, "prune_empty")


def _slice_to_goals(s: HornSystem) -> HornSystem:
    """Keep only predicates the goal clauses can observe."""
    reach: set[str] = set()
    frontier = [a.pred for c in s.goal_clauses() for a in c.body]
    while frontier:
        p = frontier.pop()
        if p in reach:
            continue
        reach.add(p)
        for c in s.clauses:
            if c.head is not None and c.head.pred == p:
                frontier.extend(a.pred for a in c.body)
    gone = {p.name for p in s.sigs} - reach
    return _remove_preds(s, gone, "slice")


# ---------------------------------------------------------------------------
# step 4: singleton-closure unfolding


def _singleton_candidates(s: HornSystem) -> list[AdtDecl]:
    out = []
    for d in s.adts:
        if len(d.ctors) != 1:
            continue
        ct = d.ctors[0]
        if any(f == adt(d.name) for f in ct.fields):
            continue  # recursive, essential
        out.append(d)
    return out


def _unfold_singleton_adts(s: HornSystem) -> HornSystem:
    current = s
    while True:
        cands = _singleton_candidates(current)
        if not cands:
            return current
        current = _unfold_one(current, cands[0])


def _unfold_one(s: HornSystem, decl: AdtDecl) -> HornSystem:
    ct = decl.ctors[0]
    k = len(ct.fields)
    sort = adt(decl.name)

    def expand_sorts(sorts: tuple[Sort, ...]) -> tuple[Sort, ...]:
        out: list[Sort] = []
        for x in sorts:
            if x == sort:
                out.extend(ct.fields)
            else:
                out.append(x)
        return tuple(out)

    col_payload: list[tuple[str, tuple[int, ...]]] = []
    sigs: list[PredSig] = []
    meta_map = dict(s.meta)
    new_meta: list[tuple[str, PredInfo]] = []
    for sig in s.sigs:
        cols = tuple(i for i, x in enumerate(sig.sorts) if x == sort)
        if cols:
            col_payload.append((sig.name, cols))
        sigs.append(PredSig(sig.name, expand_sorts(sig.sorts)))
        info = meta_map.get(sig.name, PredInfo())
        if info.res is not None and cols:
            shift = sum(k - 1 for c in cols if c < info.res)
            info = replace(info, res=info.res + shift)
        new_meta.append((sig.name, info))

    fresh_counter = [0]

    def expand_term(t: Term, renames: dict[str, list[Term]]) -> list[Term]:
        """A term at an unfolded position becomes its field terms."""
        if isinstance(t, CtorTerm) and t.adt == decl.name:
            return [fix_term(a, renames) for a in t.args]
        if isinstance(t, Var) and t.sort == sort:
            if t.name not in renames:
                if k == 1:
                    names = [t.name]
                else:
                    names = [f"{t.name}_{i + 1}" for i in range(k)]
                renames[t.name] = [
                    var_term(Var(nm, fs)) for nm, fs in zip(names, ct.fields)
                ]
            return list(renames[t.name])
        raise HornError(f"cannot unfold term {t} of sort {decl.name}")

    def fix_term(t: Term, renames: dict[str, list[Term]]) -> Term:
        if isinstance(t, CtorTerm):
            args: list[Term] = []
            fields = s.adt_decl(t.adt).ctor(t.ctor).fields
            for a, fs in zip(t.args, fields):
                if fs == sort:
                    args.extend(expand_term(a, renames))
                else:
                    args.append(fix_term(a, renames))
            return CtorTerm(t.adt, t.ctor, tuple(args))
        return t

    def fix_atom(a: Atom, sorts: tuple[Sort, ...], renames: dict[str, list[Term]]) -> Atom:
        args: list[Term] = []
        for t, x in zip(a.args, sorts):
            if x == sort:
                args.extend(expand_term(t, renames))
            else:
                args.append(fix_term(t, renames))
        return Atom(a.pred, tuple(args), a.qvars)

    old_sorts = {p.name: p.sorts for p in s.sigs}
    new_clauses = []
    for c in s.clauses:
        renames: dict[str, list[Term]] = {}
        head = (
            fix_atom(c.head, old_sorts[c.head.pred], renames)
            if c.head is not None
            else None
        )
        body = [fix_atom(a, old_sorts[a.pred], renames) for a in c.body]
        new_clauses.append(clause(body, c.constraint, head))

    adts = []
    for d in s.adts:
        if d.name == decl.name:
            continue
        adts.append(
            AdtDecl(
                d.name,
                tuple(
                    Ctor(x.name, expand_sorts(x.fields), x.origin) for x in d.ctors
                ),
            )
        )
    out = HornSystem(
        tuple(adts),
        tuple(sigs),
        tuple(new_clauses),
        s.provenance
        + (
            prov(
                "unfold_adt",
                adt=decl.name,
                ctor=ct.name,
                nfields=k,
                cols=tuple(col_payload),
            ),
        ),
        tuple(new_meta),
    )
    # the evaluator of an unfolded closure dispatches on nothing; when it
    # still shuttles higher-order data, inline it and its origin function
    evs = [
        n
        for n, i in out.meta
        if i.kind == "eval" and i.fn == decl.name
    ]
    higher_order = any(
        any(x.kind == "adt" for x in out.sig(n).sorts) for n in evs if out.has_pred(n)
    )
    if higher_order:
        for n in evs:
            out = _resolve_away(out, n)
        origin = ct.origin
        for n, i in list(out.meta):
            if i.fn == origin and i.kind == "func":
                out = _resolve_away(out, n, only_single=True)
    return out


def _resolve_away(s: HornSystem, pred: str, only_single: bool = True) -> HornSystem:
    """Inline a predicate defined by one non-recursive clause into every
    body occurrence, then remove it."""
    if not s.has_pred(pred):
        return s
    defs = [
        c for c in s.clauses if c.head is not None and c.head.pred == pred
    ]
    if len(defs) != 1:
        return s
    d = defs[0]
    if any(a.pred == pred for a in d.body):
        return s  # recursive
    new_clauses: list[Clause] = []
    for c in s.clauses:
        if c is d:
            continue
        while any(a.pred == pred for a in c.body):
            i = next(j for j, a in enumerate(c.body) if a.pred == pred)
            dd = rename_apart(d, {v.name for v in c.vars})
            r = unify(list(zip(c.body[i].args, dd.head.args)))
            if r is None:
                c = None  # the call can never be satisfied
                break
            body = [
                Atom(a.pred, tuple(r.apply(t) for t in a.args), a.qvars)
                for a in c.body[:i] + c.body[i + 1 :] + dd.body
            ]
            constraint = conj(
                [
                    fsubst(c.constraint, r.sub),
                    fsubst(dd.constraint, r.sub),
                ]
                + [eq0(e) for e in r.int_eqs]
            )
            head = c.head
            if head is not None:
                head = Atom(
                    head.pred, tuple(r.apply(t) for t in head.args), head.qvars
                )
            c = clause(body, constraint, head)
        if c is not None:
            new_clauses.append(c)
    return HornSystem(
        s.adts,
        tuple(p for p in s.sigs if p.name != pred),
        tuple(new_clauses),
        s.provenance
        + (prov("inline", pred=pred, defining=d, sig=s.sig(pred)),),
        tuple((n, i) for n, i in s.meta if n != pred),
    )


# ---------------------------------------------------------------------------
# step 5: unit columns


def _drop_unit_columns(s: HornSystem) -> HornSystem:
    has_unit = any(UNIT in p.sorts for p in s.sigs) or any(
        UNIT in ct.fields for d in s.adts for ct in d.ctors
    )
    if not has_unit:
        return s
    keep = {
        p.name: tuple(i for i, x in enumerate(p.sorts) if x != UNIT)
        for p in s.sigs
    }
    ctor_keep = {
        (d.name, ct.name): tuple(
            i for i, x in enumerate(ct.fields) if x != UNIT
        )
        for d in s.adts
        for ct in d.ctors
    }

    def fix_term(t: Term) -> Term:
        if isinstance(t, CtorTerm):
            idxs = ctor_keep[(t.adt, t.ctor)]
            return CtorTerm(
                t.adt, t.ctor, tuple(fix_term(t.args[i]) for i in idxs)
            )
        return t

    def fix_atom(a: Atom) -> Atom:
        idxs = keep[a.pred]
        return Atom(a.pred, tuple(fix_term(a.args[i]) for i in idxs), a.qvars)

    meta_map = dict(s.meta)
    new_meta = []
    payload = []
    for p in s.sigs:
        info = meta_map.get(p.name, PredInfo())
        dropped = tuple(i for i in range(len(p.sorts)) if i not in keep[p.name])
        if dropped:
            payload.append((p.name, p.sorts))
        if info.res is not None:
            if info.res in dropped:
                info = replace(info, res=None)
            else:
                info = replace(
                    info, res=info.res - sum(1 for d in dropped if d < info.res)
                )
        new_meta.append((p.name, info))
    clauses = tuple(
        clause(
            [fix_atom(a) for a in c.body],
            c.constraint,
            fix_atom(c.head) if c.head is not None else None,
        )
        for c in s.clauses
    )
    adts = tuple(
        AdtDecl(
            d.name,
            tuple(
                Ctor(
                    ct.name,
                    tuple(ct.fields[i] for i in ctor_keep[(d.name, ct.name)]),
                    ct.origin,
                )
                for ct in d.ctors
            ),
        )
        for d in s.adts
    )
    sigs = tuple(
        PredSig(p.name, tuple(p.sorts[i] for i in keep[p.name])) for p in s.sigs
    )
    return HornSystem(
        adts,
        sigs,
        clauses,
        s.provenance + (prov("drop_unit", preds=tuple(payload)),),
        tuple(new_meta),
    )


# ---------------------------------------------------------------------------
# step 6: source names


def _rename_variants(s: HornSystem) -> HornSystem:
    bases: dict[str, list[str]] = {}
    for p in s.sigs:
        if "!" in p.name:
            bases.setdefault(p.name.split("!")[0], []).append(p.name)
    renames: dict[str, str] = {}
    for base, variants in bases.items():
        if len(variants) == 1:
            renames[variants[0]] = base
        else:
            for v in variants:
                renames[v] = base if v.endswith("!ok") else f"{base}_err"
    if not renames:
        return s

    def fix_atom(a: Atom) -> Atom:
        return Atom(renames.get(a.pred, a.pred), a.args, a.qvars)

    return HornSystem(
        s.adts,
        tuple(PredSig(renames.get(p.name, p.name), p.sorts) for p in s.sigs),
        tuple(
            clause(
                [fix_atom(a) for a in c.body],
                c.constraint,
                fix_atom(c.head) if c.head is not None else None,
            )
            for c in s.clauses
        ),
        s.provenance + (prov("rename", map=tuple(sorted(renames.items()))),),
        tuple((renames.get(n, n), i) for n, i in s.meta),
    )


# ---------------------------------------------------------------------------
# model back-translation


def back_translate_model(m: Model, specialized: HornSystem) -> Model:
    """Rebuild a model of the canonical system from a model of its
    specialization, by undoing the logged steps in reverse."""
    steps = [p for p in specialized.provenance if p.op != "encode"]
    current = dict(m.interps)
    for step in reversed(steps):
        if step.op == "rename":
            mapping = dict(step.get("map"))  # old variant -> new bare
            inverse = {new: old for old, new in mapping.items()}
            current = {inverse.get(n, n): i for n, i in current.items()}
        elif step.op in ("drop_unit", "drop_args"):
            for name, sorts in step.get("preds"):
                if name in current:
                    current[name] = _reinsert_params(current[name], sorts)
        elif step.op == "unfold_adt":
            adt_name = step.get("adt")
            ctor = step.get("ctor")
            nfields = step.get("nfields")
            for name, cols in step.get("cols"):
                if name in current:
                    current[name] = _refold(
                        current[name], cols, adt_name, ctor, nfields
                    )
        elif step.op == "slice":
            for sig in step.get("sigs"):
                current[sig.name] = _total(sig, TRUE)
        elif step.op == "prune_empty":
            for sig in step.get("sigs"):
                current[sig.name] = _total(sig, FALSE)
        elif step.op == "ok_split":
            for name, sorts, ok_col in step.get("preds"):
                current[name] = _combine_ok(
                    current.get(_variant(name, True)),
                    current.get(_variant(name, False)),
                    sorts,
                    ok_col,
                )
        elif step.op == "inline":
            raise HornError(
                "model back-translation across predicate inlining is not "
                f"supported (predicate {step.get('pred')})"
            )
    return Model(tuple(sorted(current.items())))


def _params_for(sorts: tuple[Sort, ...]) -> tuple[Var, ...]:
    return tuple(Var(f"a{i}", x) for i, x in enumerate(sorts))


def _total(sig: PredSig, f: Formula) -> Interp:
    params = _params_for(sig.sorts)
    pats = tuple(Pattern() for p in params if p.sort.kind == "adt")
    return Interp(params, (InterpCase(pats, f),))


def _rename_interp(i: Interp, params: tuple[Var, ...]) -> Interp:
    sub = {
        old.name: var_term(new) for old, new in zip(i.params, params)
    }
    return Interp(
        params,
        tuple(InterpCase(c.patterns, fsubst(c.formula, sub)) for c in i.cases),
    )


def _reinsert_params(i: Interp, sorts: tuple[Sort, ...]) -> Interp:
    """Undo a column drop: the old predicate had ``sorts``; the current
    interp has params for the kept (non-dropped) positions in order."""
    kept = [j for j, x in enumerate(sorts) if x != UNIT]
    if len(kept) != len(i.params):
        kept = [j for j, _ in enumerate(sorts) if j < len(i.params)]
    params = _params_for(sorts)
    inner = _rename_interp(i, tuple(params[j] for j in kept))
    adt_positions = [j for j, x in enumerate(sorts) if x.kind == "adt"]
    old_adt_positions = [j for j in kept if sorts[j].kind == "adt"]
    cases = []
    for c in inner.cases:
        pats = []
        it = iter(c.patterns)
        for j in adt_positions:
            pats.append(next(it) if j in old_adt_positions else Pattern())
        cases.append(InterpCase(tuple(pats), c.formula))
    return Interp(params, tuple(cases))


def _refold(
    i: Interp, cols: tuple[int, ...], adt_name: str, ctor: str, nfields: int
) -> Interp:
    """Undo singleton unfolding of one predicate: field columns collapse
    back into an ADT column matched by the single constructor."""
    # reconstruct the original sort list positions: each col expanded to
    # nfields params in the unfolded interp
    params = list(i.params)
    new_params: list[Var] = []
    new_pats_positions: list[int] = []
    binder_sub: dict[str, Term] = {}
    case_pattern_cols: list[tuple[int, Pattern]] = []
    j = 0
    orig_index = 0
    while j < len(params):
        expanded_here = None
        for c_i, col in enumerate(cols):
            if orig_index == col:
                expanded_here = col
        if expanded_here is not None:
            fields = params[j : j + nfields]
            v = Var(f"c{orig_index}", adt(adt_name))
            new_params.append(v)
            binders = tuple(f.name for f in fields)
            case_pattern_cols.append((orig_index, Pattern(ctor, binders)))
            j += nfields
        else:
            new_params.append(params[j])
            j += 1
        orig_index += 1
    adt_positions = [k for k, p in enumerate(new_params) if p.sort.kind == "adt"]
    old_pat_iter_positions = [
        k
        for k, p in enumerate(new_params)
        if p.sort.kind == "adt" and all(k != c for c, _ in case_pattern_cols)
    ]
    cases = []
    for c in i.cases:
        pats = []
        it = iter(c.patterns)
        for k in adt_positions:
            hit = next((pt for col, pt in case_pattern_cols if col == k), None)
            pats.append(hit if hit is not None else next(it))
        cases.append(InterpCase(tuple(pats), c.formula))
    return Interp(tuple(new_params), tuple(cases))


def _combine_ok(
    ok_i: Optional[Interp],
    err_i: Optional[Interp],
    sorts: tuple[Sort, ...],
    ok_col: int,
) -> Interp:
    params = _params_for(sorts)
    ok_param = params[ok_col]
    reduced = tuple(p for i, p in enumerate(params) if i != ok_col)

    def cases_of(i: Optional[Interp], default: Formula) -> tuple[InterpCase, ...]:
        if i is None:
            pats = tuple(Pattern() for p in reduced if p.sort.kind == "adt")
            return (InterpCase(pats, default),)
        return _rename_interp(i, reduced).cases

    ok_cases = cases_of(ok_i, FALSE)
    err_cases = cases_of(err_i, FALSE)
    combined: list[InterpCase] = []
    for c1 in ok_cases:
        for c2 in err_cases:
            merged = _merge_patterns(c1.patterns, c2.patterns)
            if merged is None:
                continue
            pats, sub1, sub2 = merged
            f = disj(
                [
                    conj([BoolAtom(ok_param), fsubst(c1.formula, sub1)]),
                    conj(
                        [
                            BoolAtom(ok_param, positive=False),
                            fsubst(c2.formula, sub2),
                        ]
                    ),
                ]
            )
            combined.append(InterpCase(pats, f))
    return Interp(params, tuple(combined))


def _merge_patterns(p1: tuple[Pattern, ...], p2: tuple[Pattern, ...]):
    pats: list[Pattern] = []
    sub1: dict[str, Term] = {}
    sub2: dict[str, Term] = {}
    for a, b in zip(p1, p2):
        if a.ctor is None and b.ctor is None:
            pats.append(a)
        elif a.ctor is None:
            pats.append(b)
        elif b.ctor is None or a.ctor == b.ctor:
            pats.append(a)
            if b.ctor is not None:
                for x, y in zip(b.binders, a.binders):
                    if x and y and x != y:
                        # binder sorts are unknown here; integer captures
                        # are the only ones case formulas may use
                        sub2[x] = LinExpr.var(y)
        else:
            return None
    return tuple(pats), sub1, sub2
