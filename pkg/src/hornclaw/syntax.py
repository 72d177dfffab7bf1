"""Surface syntax of the mini functional language.

OCaml-flavored: top-level ``let`` bindings (curried parameters, possibly
mutually recursive), ``if/then/else``, integer arithmetic and comparisons,
strict boolean operators, ``*`` as a nondeterministic boolean, ``assert``.
A top-level ``assert e`` states a safety property whose free variables are
implicitly universally quantified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


class SourceError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# types (filled in by inference; TVar appears only during solving)


class Type:
    pass


@dataclass(frozen=True)
class TInt(Type):
    def __str__(self):
        return "Int"


@dataclass(frozen=True)
class TBool(Type):
    def __str__(self):
        return "Bool"


@dataclass(frozen=True)
class TUnit(Type):
    def __str__(self):
        return "Unit"


@dataclass(frozen=True)
class TArrow(Type):
    dom: Type
    cod: Type

    def __str__(self):
        d = f"({self.dom})" if isinstance(self.dom, TArrow) else str(self.dom)
        return f"{d} -> {self.cod}"


T_INT = TInt()
T_BOOL = TBool()
T_UNIT = TUnit()


@dataclass(eq=False)
class TVar(Type):
    id: int
    ref: Optional[Type] = None

    def __str__(self):
        return f"'t{self.id}"


# ---------------------------------------------------------------------------
# expressions


@dataclass
class Expr:
    # position and inferred type never take part in structural equality
    pos: tuple = field(default=(0, 0), compare=False, kw_only=True)
    ty: Optional[Type] = field(default=None, compare=False, kw_only=True)


@dataclass
class IntLit(Expr):
    value: int = 0


@dataclass
class BoolLit(Expr):
    value: bool = False


@dataclass
class UnitLit(Expr):
    pass


@dataclass
class Nondet(Expr):
    """The ``*`` expression: an unconstrained boolean."""


@dataclass
class Oracle(Expr):
    """A named nondeterministic boolean, introduced by normalization."""

    name: str = ""


@dataclass
class Name(Expr):
    name: str = ""


@dataclass
class Arith(Expr):
    op: str = "+"  # "+" | "-"
    lhs: Expr = None
    rhs: Expr = None


@dataclass
class Cmp(Expr):
    op: str = "="  # "<" | "<=" | ">" | ">=" | "="
    lhs: Expr = None
    rhs: Expr = None


@dataclass
class BoolOp(Expr):
    op: str = "&&"  # "&&" | "||" | "=>"
    lhs: Expr = None
    rhs: Expr = None


@dataclass
class Not(Expr):
    arg: Expr = None


@dataclass
class If(Expr):
    cond: Expr = None
    then: Expr = None
    els: Expr = None


@dataclass
class App(Expr):
    fn: Expr = None
    arg: Expr = None


@dataclass
class Assert(Expr):
    arg: Expr = None


@dataclass
class Let(Expr):
    """Internal sequencing node introduced by normalization; the surface
    language has no local let."""

    name: str = ""
    rhs: Expr = None
    body: Expr = None


@dataclass
class Binding:
    name: str
    params: list[str]
    body: Expr
    pos: tuple = field(default=(0, 0), compare=False)
    param_types: list[Type] = field(default_factory=list, compare=False)
    result_type: Optional[Type] = field(default=None, compare=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    def fn_type(self) -> Type:
        t = self.result_type
        for p in reversed(self.param_types):
            t = TArrow(p, t)
        return t


@dataclass
class TopAssert:
    expr: Expr
    pos: tuple = field(default=(0, 0), compare=False)
    free_vars: list[tuple[str, Type]] = field(default_factory=list, compare=False)


@dataclass
class Program:
    bindings: list[Binding]
    asserts: list[TopAssert]
    typed: bool = field(default=False, compare=False)

    def binding(self, name: str) -> Binding:
        for b in self.bindings:
            if b.name == name:
                return b
        raise KeyError(name)


# ---------------------------------------------------------------------------
# lexer

KEYWORDS = {"let", "if", "then", "else", "assert", "not", "true", "false"}
SYMBOLS = ["&&", "||", "=>", "<=", ">=", "<", ">", "=", "+", "-", "*", "(", ")"]


@dataclass
class Token:
    kind: str  # "int" | "name" | keyword | symbol | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    line, col = 1, 1
    n = len(source)

    def bump(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            bump(1)
            continue
        if source.startswith("(*", i):
            depth = 1
            start = (line, col)
            bump(2)
            while i < n and depth:
                if source.startswith("(*", i):
                    depth += 1
                    bump(2)
                elif source.startswith("*)", i):
                    depth -= 1
                    bump(2)
                else:
                    bump(1)
            if depth:
                raise SourceError("unterminated comment", *start)
            continue
        if ch.isdigit():
            start = (line, col)
            j = i
            while j < n and source[j].isdigit():
                j += 1
            toks.append(Token("int", source[i:j], *start))
            bump(j - i)
            continue
        if ch.isalpha() or ch == "_":
            start = (line, col)
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = word if word in KEYWORDS else "name"
            toks.append(Token(kind, word, *start))
            bump(j - i)
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                toks.append(Token(sym, sym, line, col))
                bump(len(sym))
                break
        else:
            raise SourceError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# parser

CMP_OPS = {"<", "<=", ">", ">=", "="}
ATOM_START = {"int", "name", "true", "false", "*", "("}


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def take(self, kind: str) -> Token:
        t = self.cur
        if t.kind != kind:
            raise SourceError(f"expected {kind!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        self.i += 1
        return t

    def at(self, kind: str) -> bool:
        return self.cur.kind == kind

    def program(self) -> Program:
        bindings: list[Binding] = []
        asserts: list[TopAssert] = []
        while not self.at("eof"):
            if self.at("let"):
                bindings.append(self.binding())
            elif self.at("assert"):
                t = self.take("assert")
                asserts.append(TopAssert(self.expr(), pos=(t.line, t.col)))
            else:
                t = self.cur
                raise SourceError(
                    f"expected a top-level 'let' or 'assert', found {t.text!r}",
                    t.line,
                    t.col,
                )
        seen: dict[str, tuple] = {}
        for b in bindings:
            if b.name in seen:
                raise SourceError(f"duplicate top-level name {b.name!r}", *b.pos)
            seen[b.name] = b.pos
        prog = Program(bindings, asserts)
        _check_scopes(prog)
        return prog

    def binding(self) -> Binding:
        t = self.take("let")
        name = self.take("name").text
        params: list[str] = []
        while self.at("name"):
            params.append(self.take("name").text)
        if len(set(params)) != len(params):
            raise SourceError(f"duplicate parameter in {name!r}", t.line, t.col)
        self.take("=")
        return Binding(name, params, self.expr(), pos=(t.line, t.col))

    def expr(self) -> Expr:
        if self.at("if"):
            t = self.take("if")
            cond = self.expr()
            self.take("then")
            then = self.expr()
            self.take("else")
            els = self.expr()
            return If(cond, then, els, pos=(t.line, t.col))
        return self.implies()

    def implies(self) -> Expr:
        lhs = self.or_()
        if self.at("=>"):
            t = self.take("=>")
            return BoolOp("=>", lhs, self.implies(), pos=(t.line, t.col))
        return lhs

    def or_(self) -> Expr:
        lhs = self.and_()
        while self.at("||"):
            t = self.take("||")
            lhs = BoolOp("||", lhs, self.and_(), pos=(t.line, t.col))
        return lhs

    def and_(self) -> Expr:
        lhs = self.cmp()
        while self.at("&&"):
            t = self.take("&&")
            lhs = BoolOp("&&", lhs, self.cmp(), pos=(t.line, t.col))
        return lhs

    def cmp(self) -> Expr:
        lhs = self.add()
        if self.cur.kind in CMP_OPS:
            t = self.cur
            self.i += 1
            return Cmp(t.kind, lhs, self.add(), pos=(t.line, t.col))
        return lhs

    def add(self) -> Expr:
        lhs = self.apps()
        while self.at("+") or self.at("-"):
            t = self.cur
            self.i += 1
            lhs = Arith(t.kind, lhs, self.apps(), pos=(t.line, t.col))
        return lhs

    def apps(self) -> Expr:
        if self.at("not"):
            t = self.take("not")
            return Not(self.atom(), pos=(t.line, t.col))
        if self.at("assert"):
            t = self.take("assert")
            self.take("(")
            inner = self.expr()
            self.take(")")
            return Assert(inner, pos=(t.line, t.col))
        e = self.atom()
        while self.cur.kind in ATOM_START:
            arg = self.atom()
            e = App(e, arg, pos=arg.pos)
        return e

    def atom(self) -> Expr:
        t = self.cur
        if self.at("int"):
            self.i += 1
            return IntLit(int(t.text), pos=(t.line, t.col))
        if self.at("true") or self.at("false"):
            self.i += 1
            return BoolLit(t.kind == "true", pos=(t.line, t.col))
        if self.at("*"):
            self.i += 1
            return Nondet(pos=(t.line, t.col))
        if self.at("name"):
            self.i += 1
            return Name(t.text, pos=(t.line, t.col))
        if self.at("("):
            self.take("(")
            if self.at(")"):
                self.take(")")
                return UnitLit(pos=(t.line, t.col))
            e = self.expr()
            self.take(")")
            return e
        raise SourceError(
            f"expected an expression, found {t.text or 'end of input'!r}",
            t.line,
            t.col,
        )


def _check_scopes(prog: Program) -> None:
    globals_ = {b.name for b in prog.bindings}

    def walk(e: Expr, scope: set[str], allow_free: Optional[set[str]]) -> None:
        if isinstance(e, Name):
            if e.name in scope or e.name in globals_:
                return
            if allow_free is not None:
                allow_free.add(e.name)
                return
            raise SourceError(f"unbound name {e.name!r}", *e.pos)
        for f in ("lhs", "rhs", "cond", "then", "els", "fn", "arg", "body"):
            sub = getattr(e, f, None)
            if isinstance(sub, Expr):
                walk(sub, scope, allow_free)

    for b in prog.bindings:
        walk(b.body, set(b.params), None)
    for a in prog.asserts:
        free: set[str] = set()
        walk(a.expr, set(), free)
        a.free_vars = [(n, T_INT) for n in sorted(free)]


def parse(source: str) -> Program:
    """Parse a program; raises SourceError with line/column on bad input."""
    return _Parser(tokenize(source)).program()
