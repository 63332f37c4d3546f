"""Abstract syntax of differential refinement logic, with parser and printer.

Terms, formulas and hybrid programs are immutable dataclasses. The concrete
syntax is ASCII::

    x:=x+1; ?x>=0 ++ {x'=v, v'=a & t<=T}*
    [x:=1]x>=y        <{a}>P(||)        {a} refines {b}

``parse_formula(pretty(f)) == f`` holds for every AST (round trip).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

__all__ = [
    "Variable", "Var", "Number", "FuncApp", "Dot", "Plus", "Minus", "Times", "Neg",
    "Differential", "Cmp", "PredApp", "Predicational", "TrueF", "FalseF", "TRUE",
    "FALSE", "Not", "And", "Or", "Imply", "Equiv", "Forall", "Exists", "Box",
    "Diamond", "Refines", "ProgEquiv", "ProgConst", "Test", "Assign", "AssignAny",
    "ODE", "Choice", "Seq", "Loop", "Term", "Formula", "Program", "Expr",
    "ParseError", "ArityError", "IllFormed", "parse_term", "parse_formula",
    "parse_program", "pretty", "signature", "desugar", "check_arity", "walk",
    "is_differential_free", "conj", "disj", "seq",
]

_IDENT = re.compile(r"[a-zA-Z][a-zA-Z0-9_]*\Z")
KEYWORDS = frozenset({"true", "false", "refines", "equiv"})
CMP_OPS = ("<=", "<", "=", ">=", ">")


class IllFormed(ValueError):
    """An AST node violates a structural invariant."""


class ArityError(ValueError):
    """A symbol is used with two different arities in one expression."""


class ParseError(SyntaxError):
    """Input does not conform to the grammar."""

    def __init__(self, message: str, line: int, column: int, expected: frozenset[str]):
        self.line = line
        self.column = column
        self.expected = expected
        exp = ", ".join(sorted(expected)) if expected else "end of input"
        super().__init__(f"{message} at line {line}, column {column}; expected one of: {exp}")


@dataclass(frozen=True, order=True, slots=True)
class Variable:
    name: str
    differential: bool = False

    def __post_init__(self):
        if not _IDENT.match(self.name) or self.name in KEYWORDS:
            raise IllFormed(f"bad variable name {self.name!r}")

    def prime(self) -> "Variable":
        if self.differential:
            raise IllFormed(f"{self}' is not a variable")
        return Variable(self.name, True)

    @property
    def base(self) -> "Variable":
        return Variable(self.name) if self.differential else self

    def __str__(self) -> str:
        return self.name + "'" if self.differential else self.name


# ---------------------------------------------------------------- terms

@dataclass(frozen=True, slots=True)
class Var:
    var: Variable


@dataclass(frozen=True, slots=True)
class Number:
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, slots=True)
class FuncApp:
    name: str
    args: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True, slots=True)
class Dot:
    """Argument placeholder inside substitution replacements."""
    index: int = 0


@dataclass(frozen=True, slots=True)
class Plus:
    left: "Term"
    right: "Term"


@dataclass(frozen=True, slots=True)
class Minus:
    left: "Term"
    right: "Term"


@dataclass(frozen=True, slots=True)
class Times:
    left: "Term"
    right: "Term"


@dataclass(frozen=True, slots=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True, slots=True)
class Differential:
    arg: "Term"

    def __post_init__(self):
        if not is_differential_free(self.arg):
            raise IllFormed("differential of a term that already mentions differentials")


Term = Union[Var, Number, FuncApp, Dot, Plus, Minus, Times, Neg, Differential]

# ------------------------------------------------------------- formulas


@dataclass(frozen=True, slots=True)
class Cmp:
    op: str
    left: Term
    right: Term

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise IllFormed(f"unknown comparison {self.op!r}")


@dataclass(frozen=True, slots=True)
class PredApp:
    name: str
    args: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True, slots=True)
class Predicational:
    """``P(||)``: a predicate of the whole state."""
    name: str


@dataclass(frozen=True, slots=True)
class TrueF:
    pass


@dataclass(frozen=True, slots=True)
class FalseF:
    pass


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True, slots=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Imply:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Equiv:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    var: Variable
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Exists:
    var: Variable
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Box:
    program: "Program"
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Diamond:
    program: "Program"
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Refines:
    left: "Program"
    right: "Program"


@dataclass(frozen=True, slots=True)
class ProgEquiv:
    left: "Program"
    right: "Program"


Formula = Union[Cmp, PredApp, Predicational, TrueF, FalseF, Not, And, Or, Imply, Equiv,
                Forall, Exists, Box, Diamond, Refines, ProgEquiv]

# ------------------------------------------------------------- programs


@dataclass(frozen=True, slots=True)
class ProgConst:
    name: str


@dataclass(frozen=True, slots=True)
class Test:
    cond: Formula

    def __post_init__(self):
        if not is_differential_free(self.cond):
            raise IllFormed("test formulas must be differential-free")


@dataclass(frozen=True, slots=True)
class Assign:
    var: Variable
    term: Term


@dataclass(frozen=True, slots=True)
class AssignAny:
    var: Variable


@dataclass(frozen=True, slots=True)
class ODE:
    """``{x'=e1, y'=e2 & domain}``; ``eqs`` pairs base variables with right-hand sides."""
    eqs: tuple
    domain: Formula = TRUE

    def __post_init__(self):
        if not self.eqs:
            raise IllFormed("empty differential equation system")
        seen = set()
        for v, _ in self.eqs:
            if v.differential or v in seen:
                raise IllFormed("ODE left-hand sides must be distinct base variables")
            seen.add(v)
        if not is_differential_free(self.domain):
            raise IllFormed("evolution domains must be differential-free")

    @property
    def vars(self) -> tuple:
        return tuple(v for v, _ in self.eqs)


@dataclass(frozen=True, slots=True)
class Choice:
    left: "Program"
    right: "Program"


@dataclass(frozen=True, slots=True)
class Seq:
    left: "Program"
    right: "Program"


@dataclass(frozen=True, slots=True)
class Loop:
    body: "Program"


Program = Union[ProgConst, Test, Assign, AssignAny, ODE, Choice, Seq, Loop]
Expr = Union[Term, Formula, Program]

TERM_TYPES = (Var, Number, FuncApp, Dot, Plus, Minus, Times, Neg, Differential)
FORMULA_TYPES = (Cmp, PredApp, Predicational, TrueF, FalseF, Not, And, Or, Imply, Equiv,
                 Forall, Exists, Box, Diamond, Refines, ProgEquiv)
PROGRAM_TYPES = (ProgConst, Test, Assign, AssignAny, ODE, Choice, Seq, Loop)


def conj(*fs: Formula) -> Formula:
    """Right-nested conjunction; ``true`` when empty."""
    fs = [f for f in fs if f != TRUE]
    if not fs:
        return TRUE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


def disj(*fs: Formula) -> Formula:
    fs = [f for f in fs if f != FALSE]
    if not fs:
        return FALSE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = Or(f, out)
    return out


def seq(*ps: Program) -> Program:
    out = ps[-1]
    for p in reversed(ps[:-1]):
        out = Seq(p, out)
    return out


# ------------------------------------------------------------ traversal

def children(e: Expr) -> tuple:
    if isinstance(e, (Var, Number, Dot, Predicational, TrueF, FalseF, ProgConst, AssignAny)):
        return ()
    if isinstance(e, (FuncApp, PredApp)):
        return e.args
    if isinstance(e, (Neg, Differential, Not)):
        return (e.arg,)
    if isinstance(e, (Forall, Exists)):
        return (e.body,)
    if isinstance(e, (Box, Diamond)):
        return (e.program, e.body)
    if isinstance(e, Cmp):
        return (e.left, e.right)
    if isinstance(e, Test):
        return (e.cond,)
    if isinstance(e, Assign):
        return (e.term,)
    if isinstance(e, ODE):
        return tuple(t for _, t in e.eqs) + (e.domain,)
    if isinstance(e, Loop):
        return (e.body,)
    return (e.left, e.right)


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal of all subexpressions."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def is_differential_free(e: Expr) -> bool:
    for node in walk(e):
        if isinstance(node, Differential):
            return False
        if isinstance(node, Var) and node.var.differential:
            return False
        if isinstance(node, (Assign, AssignAny)) and node.var.differential:
            return False
        if isinstance(node, ODE):
            return False
    return True


def signature(e: Expr) -> set:
    """Function, predicate, predicational and program symbols as (name, kind, arity)."""
    out = set()
    for node in walk(e):
        if isinstance(node, FuncApp):
            out.add((node.name, "func", node.arity))
        elif isinstance(node, PredApp):
            out.add((node.name, "pred", node.arity))
        elif isinstance(node, Predicational):
            out.add((node.name, "predicational", 0))
        elif isinstance(node, ProgConst):
            out.add((node.name, "prog", 0))
    return out


def check_arity(e: Expr) -> None:
    seen: dict = {}
    for name, kind, arity in sorted(signature(e)):
        if kind in ("func", "pred"):
            prev = seen.setdefault((name, kind), arity)
            if prev != arity:
                raise ArityError(f"{kind} symbol {name} used with arities {prev} and {arity}")


def desugar(e: Expr) -> Expr:
    """Rewrite diamonds to negated boxes and program equivalence to two refinements."""
    if isinstance(e, Diamond):
        return Not(Box(desugar(e.program), Not(desugar(e.body))))
    if isinstance(e, ProgEquiv):
        a, b = desugar(e.left), desugar(e.right)
        return And(Refines(a, b), Refines(b, a))
    if isinstance(e, (Var, Number, Dot, Predicational, TrueF, FalseF, ProgConst, AssignAny,
                      FuncApp, Plus, Minus, Times, Neg, Differential, Cmp, PredApp)):
        return e
    if isinstance(e, Not):
        return Not(desugar(e.arg))
    if isinstance(e, (And, Or, Imply, Equiv, Refines, Choice, Seq)):
        return type(e)(desugar(e.left), desugar(e.right))
    if isinstance(e, (Forall, Exists)):
        return type(e)(e.var, desugar(e.body))
    if isinstance(e, Box):
        return Box(desugar(e.program), desugar(e.body))
    if isinstance(e, Test):
        return Test(desugar(e.cond))
    if isinstance(e, Assign):
        return e
    if isinstance(e, ODE):
        return ODE(e.eqs, desugar(e.domain))
    if isinstance(e, Loop):
        return Loop(desugar(e.body))
    raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------- printer

def _num(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{v.numerator}/{v.denominator}"
    places = max(twos, fives)
    scaled = abs(v.numerator) * 10 ** places // v.denominator
    digits = str(scaled).rjust(places + 1, "0")
    sign = "-" if v < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def _pt(t: Term, prec: int) -> str:
    if isinstance(t, Var):
        return str(t.var)
    if isinstance(t, Number):
        return _num(t.value)
    if isinstance(t, FuncApp):
        return f"{t.name}({', '.join(_pt(a, 0) for a in t.args)})"
    if isinstance(t, Dot):
        return "." if t.index == 0 else f".{t.index}"
    if isinstance(t, Differential):
        return f"({_pt(t.arg, 0)})'"
    if isinstance(t, (Plus, Minus)):
        op = "+" if isinstance(t, Plus) else "-"
        s, level = f"{_pt(t.left, 1)}{op}{_pt(t.right, 2)}", 1
    elif isinstance(t, Times):
        s, level = f"{_pt(t.left, 2)}*{_pt(t.right, 3)}", 2
    elif isinstance(t, Neg):
        inner = f"({_pt(t.arg, 0)})" if isinstance(t.arg, Number) else _pt(t.arg, 3)
        s, level = "-" + inner, 3
    else:
        raise TypeError(f"not a term: {t!r}")
    return f"({s})" if prec > level else s


def _pf(f: Formula, prec: int) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Cmp):
        return f"{_pt(f.left, 0)}{f.op}{_pt(f.right, 0)}"
    if isinstance(f, PredApp):
        return f"{f.name}({', '.join(_pt(a, 0) for a in f.args)})"
    if isinstance(f, Predicational):
        return f"{f.name}(||)"
    if isinstance(f, (Refines, ProgEquiv)):
        kw = "refines" if isinstance(f, Refines) else "equiv"
        s = f"{_side(f.left)} {kw} {_side(f.right)}"
        return f"({s})" if prec >= 5 else s
    if isinstance(f, Equiv):
        s, level = f"{_pf(f.left, 1)} <-> {_pf(f.right, 2)}", 1
    elif isinstance(f, Imply):
        s, level = f"{_pf(f.left, 3)} -> {_pf(f.right, 2)}", 2
    elif isinstance(f, Or):
        s, level = f"{_pf(f.left, 4)} | {_pf(f.right, 3)}", 3
    elif isinstance(f, And):
        s, level = f"{_pf(f.left, 4.5)} & {_pf(f.right, 4)}", 4
    elif isinstance(f, Not):
        s, level = "!" + _pf(f.arg, 5), 5
    elif isinstance(f, Forall):
        s, level = f"\\forall {f.var} {_pf(f.body, 5)}", 5
    elif isinstance(f, Exists):
        s, level = f"\\exists {f.var} {_pf(f.body, 5)}", 5
    elif isinstance(f, Box):
        s, level = f"[{_pp(f.program, 0)}]{_pf(f.body, 5)}", 5
    elif isinstance(f, Diamond):
        s, level = f"<{_pp(f.program, 0)}>{_pf(f.body, 5)}", 5
    else:
        raise TypeError(f"not a formula: {f!r}")
    return f"({s})" if prec > level else s


def _side(p: Program) -> str:
    # an ODE's own braces double as the refinement braces
    return _pp(p, 0) if isinstance(p, ODE) else f"{{{_pp(p, 0)}}}"


def _pp(p: Program, prec: int) -> str:
    if isinstance(p, ProgConst):
        return p.name
    if isinstance(p, Test):
        return "?" + _pf(p.cond, 0)
    if isinstance(p, Assign):
        return f"{p.var}:={_pt(p.term, 0)}"
    if isinstance(p, AssignAny):
        return f"{p.var}:=*"
    if isinstance(p, ODE):
        eqs = ", ".join(f"{v}'={_pt(t, 0)}" for v, t in p.eqs)
        dom = "" if p.domain == TRUE else f" & {_pf(p.domain, 0)}"
        return f"{{{eqs}{dom}}}"
    if isinstance(p, Loop):
        if isinstance(p.body, (ProgConst, Loop, ODE)):
            return _pp(p.body, 3) + "*"
        return f"{{{_pp(p.body, 0)}}}*"
    if isinstance(p, Choice):
        s, level = f"{_pp(p.left, 2)} ++ {_pp(p.right, 1)}", 1
    elif isinstance(p, Seq):
        s, level = f"{_pp(p.left, 3)}; {_pp(p.right, 2)}", 2
    else:
        raise TypeError(f"not a program: {p!r}")
    return f"{{{s}}}" if prec > level else s


def pretty(e: Expr) -> str:
    """Canonical text with minimal parentheses; reparses to ``e``."""
    if isinstance(e, TERM_TYPES):
        return _pt(e, 0)
    if isinstance(e, FORMULA_TYPES):
        return _pf(e, 0)
    if isinstance(e, PROGRAM_TYPES):
        return _pp(e, 0)
    raise TypeError(f"not an expression: {e!r}")


for _cls in TERM_TYPES + FORMULA_TYPES + PROGRAM_TYPES:
    _cls.__str__ = pretty


# ---------------------------------------------------------------- lexer

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<quant>\\forall|\\exists)
  | (?P<predl>\(\s*\|\|\s*\))
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<dot>\.\d*)
  | (?P<ident>[a-zA-Z][a-zA-Z0-9_]*)
  | (?P<op><->|->|<=|>=|\+\+|:=|~>|[-+*()\[\]{}<>=!&|;?,'])
""", re.VERBOSE)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1,
                             frozenset())
        kind = m.lastgroup
        tok = m.group()
        if kind == "ws":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = pos + tok.rfind("\n") + 1
        else:
            if kind == "ident" and tok in KEYWORDS:
                kind = "op"
            elif kind == "op" or kind == "quant" or kind == "predl":
                kind = "op" if kind == "op" else kind
            out.append(Token(kind, tok, line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


def _parse_number(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        return Fraction(num) / Fraction(den)
    return Fraction(text)


class _Fail(Exception):
    pass


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.far = -1
        self.far_expected: set = set()

    # token helpers
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("op", "quant", "predl") and t.text == text

    def fail(self, *expected: str):
        if self.i > self.far:
            self.far, self.far_expected = self.i, set(expected)
        elif self.i == self.far:
            self.far_expected.update(expected)
        raise _Fail()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.fail(repr(text))

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            self.fail("identifier")
        self.i += 1
        return t.text

    def error(self) -> ParseError:
        tok = self.toks[max(self.far, 0)] if self.far >= 0 else self.peek()
        shown = tok.text or "end of input"
        return ParseError(f"unexpected {shown!r}", tok.line, tok.col, frozenset(self.far_expected))

    def run(self, rule):
        try:
            result = rule()
            if self.peek().kind != "eof":
                self.fail("end of input")
            return result
        except _Fail:
            raise self.error() from None

    # terms
    def term(self) -> Term:
        left = self.prod()
        while True:
            if self.accept("+"):
                left = Plus(left, self.prod())
            elif self.accept("-"):
                left = Minus(left, self.prod())
            else:
                return left

    def _starts_factor(self, k: int) -> bool:
        t = self.peek(k)
        return t.kind in ("num", "ident", "dot") or (t.kind == "op" and t.text in ("-", "("))

    def prod(self) -> Term:
        left = self.factor()
        while self.at("*") and self._starts_factor(1):
            self.i += 1
            left = Times(left, self.factor())
        return left

    def factor(self) -> Term:
        t = self.peek()
        if self.accept("-"):
            n = self.peek()
            if n.kind == "num":
                self.i += 1
                return Number(-_parse_number(n.text))
            return Neg(self.factor())
        if t.kind == "num":
            self.i += 1
            return Number(_parse_number(t.text))
        if t.kind == "dot":
            self.i += 1
            return Dot(int(t.text[1:] or 0))
        if t.kind == "ident":
            self.i += 1
            if self.accept("("):
                args = []
                if not self.accept(")"):
                    args.append(self.term())
                    while self.accept(","):
                        args.append(self.term())
                    self.expect(")")
                return FuncApp(t.text, tuple(args))
            if self.accept("'"):
                return Var(Variable(t.text, True))
            return Var(Variable(t.text))
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            if self.accept("'"):
                try:
                    return Differential(inner)
                except IllFormed:
                    self.fail("differential-free term")
            return inner
        self.fail("term")

    # formulas
    def formula(self) -> Formula:
        left = self.imply()
        while self.accept("<->"):
            left = Equiv(left, self.imply())
        return left

    def imply(self) -> Formula:
        left = self.or_()
        if self.accept("->"):
            return Imply(left, self.imply())
        return left

    def or_(self) -> Formula:
        left = self.and_()
        if self.accept("|"):
            return Or(left, self.or_())
        return left

    def and_(self) -> Formula:
        left = self.unary()
        if self.accept("&"):
            return And(left, self.and_())
        return left

    def unary(self) -> Formula:
        if self.accept("!"):
            return Not(self.unary())
        if self.at("\\forall") or self.at("\\exists"):
            kind = self.peek().text
            self.i += 1
            v = Variable(self.ident())
            body = self.unary()
            return Forall(v, body) if kind == "\\forall" else Exists(v, body)
        if self.accept("["):
            p = self.program()
            self.expect("]")
            return Box(p, self.unary())
        if self.at("<"):
            save = self.i
            try:
                self.i += 1
                p = self.program()
                self.expect(">")
                return Diamond(p, self.unary())
            except _Fail:
                self.i = save
        return self.atom_formula()

    def atom_formula(self) -> Formula:
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.at("{"):
            left = self.refinement_side()
            if self.accept("refines"):
                kind = Refines
            elif self.accept("equiv"):
                kind = ProgEquiv
            else:
                self.fail("'refines'", "'equiv'")
            return kind(left, self.refinement_side())
        t = self.peek()
        if t.kind == "ident" and self.peek(1).kind == "predl":
            self.i += 2
            return Predicational(t.text)
        save = self.i
        try:
            left = self.term()
            op = self.peek()
            if op.kind == "op" and op.text in CMP_OPS:
                self.i += 1
                return Cmp(op.text, left, self.term())
            self.fail(*(repr(o) for o in CMP_OPS))
        except _Fail:
            self.i = save
        if self.accept("("):
            inner = self.formula()
            self.expect(")")
            return inner
        if t.kind == "ident" and self.at("(", 1):
            self.i += 2
            args = []
            if not self.accept(")"):
                args.append(self.term())
                while self.accept(","):
                    args.append(self.term())
                self.expect(")")
            return PredApp(t.text, tuple(args))
        self.fail("formula")

    def _ode_ahead(self) -> bool:
        return self.peek(1).kind == "ident" and self.at("'", 2) and self.at("=", 3)

    def refinement_side(self) -> Program:
        if self.at("{") and self._ode_ahead():
            return self.atom_program()
        self.expect("{")
        p = self.program()
        self.expect("}")
        return p

    # programs
    def program(self) -> Program:
        left = self.seqp()
        if self.accept("++"):
            return Choice(left, self.program())
        return left

    def seqp(self) -> Program:
        left = self.post()
        if self.accept(";"):
            return Seq(left, self.seqp())
        return left

    def post(self) -> Program:
        p = self.atom_program()
        while self.accept("*"):
            p = Loop(p)
        return p

    def atom_program(self) -> Program:
        if self.accept("?"):
            cond = self.formula()
            try:
                return Test(cond)
            except IllFormed:
                self.fail("differential-free test")
        t = self.peek()
        if t.kind == "ident":
            if self.at(":=", 1) or (self.at("'", 1) and self.at(":=", 2)):
                self.i += 1
                v = Variable(t.text, self.accept("'"))
                self.expect(":=")
                if self.accept("*"):
                    return AssignAny(v)
                return Assign(v, self.term())
            self.i += 1
            return ProgConst(t.text)
        if self.at("{"):
            ode = self._ode_ahead()
            self.i += 1
            if ode:
                eqs = [self._ode_eq()]
                while self.accept(","):
                    eqs.append(self._ode_eq())
                domain = self.formula() if self.accept("&") else TRUE
                self.expect("}")
                try:
                    return ODE(tuple(eqs), domain)
                except IllFormed:
                    self.fail("well-formed differential equation")
            p = self.program()
            self.expect("}")
            return p
        self.fail("program")

    def _ode_eq(self):
        v = Variable(self.ident())
        self.expect("'")
        self.expect("=")
        return (v, self.term())


def _parse(text: str, rule: str):
    p = _Parser(text)
    result = p.run(getattr(p, rule))
    check_arity(result)
    return result


def parse_term(text: str) -> Term:
    return _parse(text, "term")


def parse_formula(text: str) -> Formula:
    return _parse(text, "formula")


def parse_program(text: str) -> Program:
    return _parse(text, "program")
