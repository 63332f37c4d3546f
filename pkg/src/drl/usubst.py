"""One-pass uniform substitution with taboo sets.

A substitution replaces function, predicate, predicational and program symbols.
Taboos are the variables bound by the surrounding context; a replacement whose
free variables meet the taboo set is rejected with a ``ClashError``. Programs
return an output taboo that flows into whatever follows them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import syntax as S
from .statics import ALL, EMPTY, VarSet, bv, fv_formula, fv_program, fv_term


class ClashError(Exception):
    """A replacement would capture a variable bound in the context."""

    def __init__(self, symbol: str, taboo: VarSet, free: VarSet, path: tuple):
        self.symbol = symbol
        self.taboo = taboo
        self.free = free
        self.path = path
        where = "/".join(map(str, path)) or "<root>"
        super().__init__(f"clash at {symbol}: replacement mentions {free & taboo} "
                         f"which is taboo {taboo} (at {where})")


class SubstError(ValueError):
    """Malformed substitution."""


def _dots(e: S.Expr) -> set:
    return {n.index for n in S.walk(e) if isinstance(n, S.Dot)}


@dataclass(frozen=True)
class Subst:
    """Replacement rules keyed by (name, arity) for functions and predicates."""
    funcs: dict = field(default_factory=dict)
    preds: dict = field(default_factory=dict)
    predicationals: dict = field(default_factory=dict)
    progs: dict = field(default_factory=dict)
    dots: dict = field(default_factory=dict)

    def __post_init__(self):
        for (name, arity), rep in list(self.funcs.items()) + list(self.preds.items()):
            bad = {i for i in _dots(rep) if i >= arity}
            if bad:
                raise SubstError(f"replacement for {name} uses dot index {min(bad)} "
                                 f"beyond arity {arity}")
        for name, rep in list(self.predicationals.items()) + list(self.progs.items()):
            if _dots(rep):
                raise SubstError(f"replacement for {name} must not mention dots")
        for name, rep in self.progs.items():
            if not isinstance(rep, S.PROGRAM_TYPES):
                raise SubstError(f"replacement for program {name} is not a program")

    @property
    def is_empty(self) -> bool:
        return not (self.funcs or self.preds or self.predicationals or self.progs or self.dots)

    def rules(self) -> list:
        out = [(f"{n}({', '.join('.' + str(i) for i in range(k))})", S.pretty(r))
               for (n, k), r in sorted(self.funcs.items())]
        out += [(f"{n}({', '.join('.' + str(i) for i in range(k))})", S.pretty(r))
                for (n, k), r in sorted(self.preds.items())]
        out += [(f"{n}(||)", S.pretty(r)) for n, r in sorted(self.predicationals.items())]
        out += [(n, S.pretty(r)) for n, r in sorted(self.progs.items())]
        return out

    def __str__(self) -> str:
        return "\n".join(f"{lhs} ~> {rhs}" for lhs, rhs in self.rules())


def _dot_subst(args: list) -> Subst:
    return Subst(dots=dict(enumerate(args)))


def _check(symbol: str, rep_fv: VarSet, taboo: VarSet, path: tuple):
    if not rep_fv.disjoint(taboo):
        raise ClashError(symbol, taboo, rep_fv, path)


def apply_term(s: Subst, taboo: VarSet, t: S.Term, path: tuple = ()) -> S.Term:
    if isinstance(t, (S.Var, S.Number)):
        return t
    if isinstance(t, S.Dot):
        if t.index in s.dots:
            rep = s.dots[t.index]
            _check(f".{t.index}" if t.index else ".", fv_term(rep), taboo, path)
            return rep
        return t
    if isinstance(t, S.FuncApp):
        args = tuple(apply_term(s, taboo, a, path + (f"arg{i}",)) for i, a in enumerate(t.args))
        rep = s.funcs.get((t.name, len(t.args)))
        if rep is None:
            return S.FuncApp(t.name, args)
        _check(t.name, fv_term(rep), taboo, path)
        return apply_term(_dot_subst(list(args)), EMPTY, rep, path)
    if isinstance(t, (S.Plus, S.Minus, S.Times)):
        return type(t)(apply_term(s, taboo, t.left, path + ("left",)),
                       apply_term(s, taboo, t.right, path + ("right",)))
    if isinstance(t, S.Neg):
        return S.Neg(apply_term(s, taboo, t.arg, path + ("arg",)))
    if isinstance(t, S.Differential):
        return S.Differential(apply_term(s, ALL, t.arg, path + ("arg",)))
    raise TypeError(f"not a term: {t!r}")


def _apply_formula(s: Subst, taboo: VarSet, f: S.Formula, path: tuple) -> S.Formula:
    if isinstance(f, (S.TrueF, S.FalseF)):
        return f
    if isinstance(f, S.Cmp):
        return S.Cmp(f.op, apply_term(s, taboo, f.left, path + ("left",)),
                     apply_term(s, taboo, f.right, path + ("right",)))
    if isinstance(f, S.PredApp):
        args = tuple(apply_term(s, taboo, a, path + (f"arg{i}",)) for i, a in enumerate(f.args))
        rep = s.preds.get((f.name, len(f.args)))
        if rep is None:
            return S.PredApp(f.name, args)
        _check(f.name, fv_formula(rep), taboo, path)
        return _apply_formula(_dot_subst(list(args)), EMPTY, rep, path)
    if isinstance(f, S.Predicational):
        # p(x-bar) reads every variable, so nothing can be captured
        return s.predicationals.get(f.name, f)
    if isinstance(f, S.Not):
        return S.Not(_apply_formula(s, taboo, f.arg, path + ("arg",)))
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return type(f)(_apply_formula(s, taboo, f.left, path + ("left",)),
                       _apply_formula(s, taboo, f.right, path + ("right",)))
    if isinstance(f, (S.Forall, S.Exists)):
        return type(f)(f.var, _apply_formula(s, taboo | VarSet.of(f.var), f.body, path + ("body",)))
    if isinstance(f, S.Box):
        prog, out = _apply_program(s, taboo, f.program, path + ("program",))
        return S.Box(prog, _apply_formula(s, out, f.body, path + ("body",)))
    if isinstance(f, S.Refines):
        left, _ = _apply_program(s, taboo, f.left, path + ("left",))
        right, _ = _apply_program(s, taboo, f.right, path + ("right",))
        return S.Refines(left, right)
    raise TypeError(f"not a desugared formula: {f!r}")


def _apply_program(s: Subst, taboo: VarSet, p: S.Program, path: tuple):
    if isinstance(p, S.ProgConst):
        rep = s.progs.get(p.name)
        if rep is None:
            return p, taboo | ALL
        return rep, taboo | bv(rep)
    if isinstance(p, S.Test):
        return S.Test(_apply_formula(s, taboo, p.cond, path + ("cond",))), taboo
    if isinstance(p, S.Assign):
        return (S.Assign(p.var, apply_term(s, taboo, p.term, path + ("term",))),
                taboo | VarSet.of(p.var))
    if isinstance(p, S.AssignAny):
        return p, taboo | VarSet.of(p.var)
    if isinstance(p, S.ODE):
        inner = taboo | bv(p)
        eqs = tuple((v, apply_term(s, inner, t, path + (f"eq{i}",))) for i, (v, t) in enumerate(p.eqs))
        return S.ODE(eqs, _apply_formula(s, inner, p.domain, path + ("domain",))), inner
    if isinstance(p, S.Choice):
        left, v = _apply_program(s, taboo, p.left, path + ("left",))
        right, w = _apply_program(s, taboo, p.right, path + ("right",))
        return S.Choice(left, right), v | w
    if isinstance(p, S.Seq):
        left, v = _apply_program(s, taboo, p.left, path + ("left",))
        right, w = _apply_program(s, v, p.right, path + ("right",))
        return S.Seq(left, right), w
    if isinstance(p, S.Loop):
        _, v = _apply_program(s, taboo, p.body, path + ("body",))
        body, v2 = _apply_program(s, v, p.body, path + ("body",))
        assert v2 == v, "loop taboo is not a fixpoint after two passes"
        return S.Loop(body), v
    raise TypeError(f"not a program: {p!r}")


def apply_formula(s: Subst, taboo: VarSet, f: S.Formula) -> S.Formula:
    return _apply_formula(s, taboo, S.desugar(f), ())


def apply_program(s: Subst, taboo: VarSet, p: S.Program):
    """Returns ``(substituted program, output taboo)``."""
    return _apply_program(s, taboo, S.desugar(p), ())


def us(s: Subst, f: S.Formula) -> S.Formula:
    return apply_formula(s, EMPTY, f)


# ------------------------------------------------------------ text format

_LHS = re.compile(r"^\s*([a-zA-Z][a-zA-Z0-9_]*)\s*(\((.*)\))?\s*$")


def _lhs_arity(name: str, inner: str) -> int:
    parts = [p.strip() for p in inner.split(",")] if inner.strip() else []
    for i, p in enumerate(parts):
        if p not in (f".{i}",) + (("." ,) if i == 0 else ()):
            raise SubstError(f"arguments of {name} must be dots .0, .1, ... in order")
    return len(parts)


def parse_subst(text: str, context: Optional[S.Expr] = None) -> Subst:
    """Parse rules ``lhs ~> rhs``, one per line (``;;`` also separates rules).

    Whether ``f(.)`` names a function or a predicate is taken from the
    signature of ``context`` when available, otherwise from whether the
    right-hand side parses as a term.
    """
    kinds = {}
    if context is not None:
        kinds = {(n, a): k for n, k, a in S.signature(context)}
    funcs, preds, predicationals, progs = {}, {}, {}, {}
    for raw in re.split(r"\n|;;", text):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "~>" not in line:
            raise SubstError(f"missing '~>' in rule {line!r}")
        lhs, rhs = (x.strip() for x in line.split("~>", 1))
        if re.fullmatch(r"[a-zA-Z][a-zA-Z0-9_]*\s*\(\s*\|\|\s*\)", lhs):
            predicationals[lhs.split("(")[0].strip()] = S.parse_formula(rhs)
            continue
        m = _LHS.match(lhs)
        if not m:
            raise SubstError(f"bad left-hand side {lhs!r}")
        name = m.group(1)
        if m.group(2) is None:
            progs[name] = S.parse_program(rhs)
            continue
        arity = _lhs_arity(name, m.group(3))
        kind = kinds.get((name, arity))
        if kind is None:
            try:
                funcs[(name, arity)] = S.parse_term(rhs)
                continue
            except SyntaxError:
                kind = "pred"
        if kind == "func":
            funcs[(name, arity)] = S.parse_term(rhs)
        else:
            preds[(name, arity)] = S.parse_formula(rhs)
    return Subst(funcs, preds, predicationals, progs)
