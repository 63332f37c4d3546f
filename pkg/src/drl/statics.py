"""Syntactic free, bound and must-bound variables.

Sets of variables may be cofinite: a program constant can bind anything, so
``bv(a)`` is the set of all variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import syntax as S


def _key(v: S.Variable):
    return (v.name, v.differential)


@dataclass(frozen=True, slots=True)
class VarSet:
    """Finite set of variables, or (``cofinite``) the complement of one."""
    elems: frozenset = frozenset()
    cofinite: bool = False

    @staticmethod
    def of(*vs: S.Variable) -> "VarSet":
        return VarSet(frozenset(vs))

    def __contains__(self, v: S.Variable) -> bool:
        return (v in self.elems) != self.cofinite

    def union(self, other: "VarSet") -> "VarSet":
        a, b = self, other
        if not a.cofinite and not b.cofinite:
            return VarSet(a.elems | b.elems)
        if a.cofinite and b.cofinite:
            return VarSet(a.elems & b.elems, True)
        if a.cofinite:
            a, b = b, a
        return VarSet(b.elems - a.elems, True)

    def inter(self, other: "VarSet") -> "VarSet":
        a, b = self, other
        if not a.cofinite and not b.cofinite:
            return VarSet(a.elems & b.elems)
        if a.cofinite and b.cofinite:
            return VarSet(a.elems | b.elems, True)
        if a.cofinite:
            a, b = b, a
        return VarSet(a.elems - b.elems)

    def complement(self) -> "VarSet":
        return VarSet(self.elems, not self.cofinite)

    def minus(self, other: "VarSet") -> "VarSet":
        return self.inter(other.complement())

    def subset(self, other: "VarSet") -> bool:
        return self.minus(other).is_empty

    @property
    def is_empty(self) -> bool:
        return not self.cofinite and not self.elems

    def primed(self) -> "VarSet":
        """Differential symbols of the base variables in a finite set."""
        if self.cofinite:
            raise ValueError("cannot prime a cofinite set")
        return VarSet(frozenset(v.prime() for v in self.elems if not v.differential))

    def disjoint(self, other: "VarSet") -> bool:
        return self.inter(other).is_empty

    __or__ = union
    __and__ = inter
    __sub__ = minus
    __le__ = subset

    def sorted(self) -> list:
        return sorted(self.elems, key=_key)

    def __str__(self) -> str:
        body = "{" + ", ".join(str(v) for v in self.sorted()) + "}"
        if not self.cofinite:
            return body
        return "ALL" if not self.elems else "ALL \\ " + body

    def to_json(self):
        names = [str(v) for v in self.sorted()]
        return {"all_except": names} if self.cofinite else names


EMPTY = VarSet()
ALL = VarSet(frozenset(), True)


@lru_cache(maxsize=1 << 16)
def fv_term(t: S.Term) -> VarSet:
    if isinstance(t, S.Var):
        return VarSet.of(t.var)
    if isinstance(t, (S.Number, S.Dot)):
        return EMPTY
    if isinstance(t, S.FuncApp):
        out = EMPTY
        for a in t.args:
            out = out | fv_term(a)
        return out
    if isinstance(t, (S.Plus, S.Minus, S.Times)):
        return fv_term(t.left) | fv_term(t.right)
    if isinstance(t, S.Neg):
        return fv_term(t.arg)
    if isinstance(t, S.Differential):
        inner = fv_term(t.arg)
        return inner | inner.primed()
    raise TypeError(f"not a term: {t!r}")


def _refinement_fv(a: S.Program, b: S.Program) -> VarSet:
    bound = bv(a) | bv(b)
    must = mbv(a) & mbv(b)
    return fv_program(a) | fv_program(b) | (bound - must)


@lru_cache(maxsize=1 << 16)
def fv_formula(f: S.Formula) -> VarSet:
    if isinstance(f, (S.TrueF, S.FalseF)):
        return EMPTY
    if isinstance(f, S.Cmp):
        return fv_term(f.left) | fv_term(f.right)
    if isinstance(f, S.PredApp):
        out = EMPTY
        for a in f.args:
            out = out | fv_term(a)
        return out
    if isinstance(f, S.Predicational):
        return ALL
    if isinstance(f, S.Not):
        return fv_formula(f.arg)
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return fv_formula(f.left) | fv_formula(f.right)
    if isinstance(f, (S.Forall, S.Exists)):
        return fv_formula(f.body) - VarSet.of(f.var)
    if isinstance(f, (S.Box, S.Diamond)):
        return fv_program(f.program) | (fv_formula(f.body) - mbv(f.program))
    if isinstance(f, (S.Refines, S.ProgEquiv)):
        return _refinement_fv(f.left, f.right)
    raise TypeError(f"not a formula: {f!r}")


@lru_cache(maxsize=1 << 16)
def fv_program(p: S.Program) -> VarSet:
    if isinstance(p, S.ProgConst):
        return ALL
    if isinstance(p, S.Test):
        return fv_formula(p.cond)
    if isinstance(p, S.Assign):
        return fv_term(p.term)
    if isinstance(p, S.AssignAny):
        return VarSet.of(p.var)
    if isinstance(p, S.ODE):
        out = VarSet(frozenset(p.vars))
        for _, t in p.eqs:
            out = out | fv_term(t)
        return out | fv_formula(p.domain)
    if isinstance(p, S.Choice):
        return fv_program(p.left) | fv_program(p.right)
    if isinstance(p, S.Seq):
        return fv_program(p.left) | (fv_program(p.right) - mbv(p.left))
    if isinstance(p, S.Loop):
        return fv_program(p.body)
    raise TypeError(f"not a program: {p!r}")


@lru_cache(maxsize=1 << 16)
def bv(p: S.Program) -> VarSet:
    if isinstance(p, S.ProgConst):
        return ALL
    if isinstance(p, S.Test):
        return EMPTY
    if isinstance(p, (S.Assign, S.AssignAny)):
        return VarSet.of(p.var)
    if isinstance(p, S.ODE):
        return VarSet(frozenset(p.vars) | frozenset(v.prime() for v in p.vars))
    if isinstance(p, (S.Choice, S.Seq)):
        return bv(p.left) | bv(p.right)
    if isinstance(p, S.Loop):
        return bv(p.body)
    raise TypeError(f"not a program: {p!r}")


@lru_cache(maxsize=1 << 16)
def mbv(p: S.Program) -> VarSet:
    if isinstance(p, (S.ProgConst, S.Test, S.Loop)):
        return EMPTY
    if isinstance(p, (S.Assign, S.AssignAny, S.ODE)):
        return bv(p)
    if isinstance(p, S.Choice):
        return mbv(p.left) & mbv(p.right)
    if isinstance(p, S.Seq):
        return mbv(p.left) | mbv(p.right)
    raise TypeError(f"not a program: {p!r}")


@lru_cache(maxsize=1 << 16)
def bv_formula(f: S.Formula) -> VarSet:
    """Variables bound somewhere inside a formula.

    A refinement binds nothing: its programs are compared, not run, from the
    current state.
    """
    if isinstance(f, (S.Forall, S.Exists)):
        return VarSet.of(f.var) | bv_formula(f.body)
    if isinstance(f, (S.Box, S.Diamond)):
        return bv(f.program) | bv_formula(f.body)
    if isinstance(f, S.Not):
        return bv_formula(f.arg)
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return bv_formula(f.left) | bv_formula(f.right)
    return EMPTY


def fv(e: S.Expr) -> VarSet:
    if isinstance(e, S.TERM_TYPES):
        return fv_term(e)
    if isinstance(e, S.FORMULA_TYPES):
        return fv_formula(e)
    return fv_program(e)
