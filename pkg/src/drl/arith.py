"""Linear real arithmetic: Gauss elimination on equalities, Fourier-Motzkin on
inequalities, exact rationals throughout.

Formulas are kept in disjunctive normal form. A clause is a frozenset of atoms
``sum(c_i * x_i) + k  op  0`` with ``op`` one of ``=``, ``<=``, ``<``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import syntax as S
from .poly import Poly, Unsupported, term_to_poly

DEFAULT_BUDGET = 50_000


class Nonlinear(ValueError):
    def __init__(self, term):
        self.term = term
        super().__init__(f"Nonlinear term {S.pretty(term) if not isinstance(term, str) else term}")


class SizeBudgetExceeded(RuntimeError):
    pass


# ------------------------------------------------------------ verdicts

@dataclass(frozen=True)
class Valid:
    trail: tuple = ()

    status = "valid"


@dataclass(frozen=True)
class Invalid:
    witness: dict = field(default_factory=dict)

    status = "invalid"


@dataclass(frozen=True)
class Unknown:
    reason: str = ""

    status = "unknown"


# ------------------------------------------------------------ atoms

@dataclass(frozen=True)
class Atom:
    """``sum(coeffs) + const  op  0``; coefficients sorted by variable, none zero."""
    coeffs: tuple
    const: Fraction
    op: str

    @staticmethod
    def make(coeffs: dict, const, op: str) -> "Atom":
        items = tuple(sorted(((v, Fraction(c)) for v, c in coeffs.items() if c),
                             key=lambda vc: (vc[0].name, vc[0].differential)))
        const = Fraction(const)
        if items:
            # scale so the leading coefficient has magnitude one (sign kept for
            # inequalities, positive for equalities)
            lead = items[0][1]
            s = abs(lead) if op != "=" else lead
            items = tuple((v, c / s) for v, c in items)
            const = const / s
        return Atom(items, const, op)

    @property
    def vars(self):
        return {v for v, _ in self.coeffs}

    def coeff(self, v) -> Fraction:
        for w, c in self.coeffs:
            if w == v:
                return c
        return Fraction(0)

    def ground(self) -> Optional[bool]:
        if self.coeffs:
            return None
        return _holds(self.const, self.op)

    def value(self, env) -> Fraction:
        return sum((c * Fraction(env.get(v, 0)) for v, c in self.coeffs), self.const)

    def holds(self, env) -> bool:
        return _holds(self.value(env), self.op)

    def negate(self) -> list:
        """Atoms whose disjunction is the negation."""
        d = {v: -c for v, c in self.coeffs}
        if self.op == "<=":
            return [Atom.make(d, -self.const, "<")]
        if self.op == "<":
            return [Atom.make(d, -self.const, "<=")]
        return [Atom.make(dict(self.coeffs), self.const, "<"), Atom.make(d, -self.const, "<")]

    def substitute(self, v, coeffs: dict, const) -> "Atom":
        """Replace v by ``sum(coeffs) + const``."""
        c = self.coeff(v)
        if not c:
            return self
        d = {w: k for w, k in self.coeffs if w != v}
        for w, k in coeffs.items():
            d[w] = d.get(w, 0) + c * k
        return Atom.make(d, self.const + c * const, self.op)

    def __str__(self):
        parts = [f"{c}*{v}" for v, c in self.coeffs]
        return f"{' + '.join(parts) or '0'} + {self.const} {self.op} 0"


def _holds(value: Fraction, op: str) -> bool:
    return value == 0 if op == "=" else value <= 0 if op == "<=" else value < 0


# ------------------------------------------------------------ linearization

def linear_term(t: S.Term) -> tuple:
    """``(coeffs, const)`` for a linear term."""
    try:
        p = term_to_poly(t)
    except Unsupported as exc:
        raise Unsupported(str(exc)) from None
    parts = p.linear_parts()
    if parts is None:
        raise Nonlinear(t)
    const, coeffs = parts
    return coeffs, const


def _atom_dnf(f: S.Cmp, positive: bool) -> list:
    lc, lk = linear_term(f.left)
    rc, rk = linear_term(f.right)
    d = dict(lc)
    for v, c in rc.items():
        d[v] = d.get(v, 0) - c
    k = lk - rk
    neg = {v: -c for v, c in d.items()}
    op = f.op
    if not positive:
        op = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}[op]
    if op == "=":
        return [[Atom.make(d, k, "=")]]
    if op == "!=":
        return [[Atom.make(d, k, "<")], [Atom.make(neg, -k, "<")]]
    if op in ("<", "<="):
        return [[Atom.make(d, k, op)]]
    return [[Atom.make(neg, -k, "<" if op == ">" else "<=")]]


class _Budget:
    def __init__(self, limit):
        self.limit = limit

    def check(self, clauses):
        if self.limit is not None and sum(len(c) for c in clauses) > self.limit:
            raise SizeBudgetExceeded(f"more than {self.limit} atoms")


def _simplify(clauses, budget: _Budget) -> list:
    out = set()
    for c in clauses:
        kept = set()
        dead = False
        for a in c:
            g = a.ground()
            if g is False:
                dead = True
                break
            if g is None:
                kept.add(a)
        if not dead and not _trivially_unsat(kept):
            out.add(frozenset(kept))
    if frozenset() in out:
        return [frozenset()]
    out = sorted(out, key=lambda c: (len(c), sorted(map(str, c))))
    budget.check(out)
    return out


def _trivially_unsat(clause) -> bool:
    # e <= 0 together with -e < 0, or e < 0 with -e <= 0
    index = {}
    for a in clause:
        if a.op != "=":
            index.setdefault(a.coeffs, []).append(a)
    for coeffs, atoms in index.items():
        neg = tuple((v, -c) for v, c in coeffs)
        for b in index.get(neg, []):
            for a in atoms:
                # a: e + k1 op 0 and b: -e + k2 op 0 give k2 <= e <= -k1
                lo, hi = b.const, -a.const
                if lo > hi or (lo == hi and (a.op == "<" or b.op == "<")):
                    return True
    return False


def to_dnf(f: S.Formula, positive: bool = True, budget: Optional[_Budget] = None) -> list:
    """Quantifier-free DNF of ``f`` (or of its negation), eliminating quantifiers."""
    budget = budget or _Budget(DEFAULT_BUDGET)
    if isinstance(f, S.TrueF):
        return [frozenset()] if positive else []
    if isinstance(f, S.FalseF):
        return [] if positive else [frozenset()]
    if isinstance(f, S.Cmp):
        return _simplify([frozenset(c) for c in _atom_dnf(f, positive)], budget)
    if isinstance(f, S.Not):
        return to_dnf(f.arg, not positive, budget)
    if isinstance(f, S.Imply):
        return to_dnf(S.Or(S.Not(f.left), f.right), positive, budget)
    if isinstance(f, S.Equiv):
        g = S.Or(S.And(f.left, f.right), S.And(S.Not(f.left), S.Not(f.right)))
        return to_dnf(g, positive, budget)
    if isinstance(f, (S.And, S.Or)):
        conj = isinstance(f, S.And) == positive
        left = to_dnf(f.left, positive, budget)
        right = to_dnf(f.right, positive, budget)
        if not conj:
            return _simplify(left + right, budget)
        budget.check([a | b for a in left[:1] for b in right[:1]])
        if len(left) * len(right) > (budget.limit or 10 ** 9):
            raise SizeBudgetExceeded("conjunction of disjunctions too large")
        return _simplify([a | b for a in left for b in right], budget)
    if isinstance(f, (S.Exists, S.Forall)):
        body = to_dnf(f.body, True, budget)
        if isinstance(f, S.Exists):
            ex = _simplify([c2 for c in body for c2 in _fm_clause(c, f.var, budget)], budget)
            return ex if positive else negate_dnf(ex, budget)
        # forall x b  ==  not exists x not b
        nb = negate_dnf(body, budget)
        ex = _simplify([c2 for c in nb for c2 in _fm_clause(c, f.var, budget)], budget)
        return negate_dnf(ex, budget) if positive else ex
    if isinstance(f, (S.Box, S.Refines, S.Diamond, S.ProgEquiv)):
        raise Unsupported("modal formula in arithmetic")
    raise Unsupported(f"{type(f).__name__} is not arithmetic")


def negate_dnf(clauses: list, budget: _Budget) -> list:
    out = [frozenset()]
    for c in clauses:
        alts = [n for a in c for n in a.negate()]
        out = _simplify([o | {n} for o in out for n in alts], budget)
        if not out:
            return []
    return out


# ------------------------------------------------------------ elimination

def _fm_clause(clause, v, budget: _Budget) -> list:
    """Eliminate ``v`` from a conjunction of atoms; returns one clause (or none)."""
    eqs = [a for a in clause if a.op == "=" and a.coeff(v)]
    if eqs:
        e = eqs[0]
        c = e.coeff(v)
        coeffs = {w: -k / c for w, k in e.coeffs if w != v}
        const = -e.const / c
        rest = [a.substitute(v, coeffs, const) for a in clause if a is not e]
        return _simplify([frozenset(rest)], budget)
    lows, ups, rest = [], [], []
    for a in clause:
        c = a.coeff(v)
        if not c:
            rest.append(a)
        elif c > 0:
            ups.append(a)    # v <= ...
        else:
            lows.append(a)   # v >= ...
    for lo in lows:
        for up in ups:
            cl, cu = -lo.coeff(v), up.coeff(v)
            d = {}
            for w, k in lo.coeffs:
                d[w] = d.get(w, 0) + k * cu
            for w, k in up.coeffs:
                d[w] = d.get(w, 0) + k * cl
            d.pop(v, None)
            op = "<" if "<" in (lo.op, up.op) else "<="
            rest.append(Atom.make(d, lo.const * cu + up.const * cl, op))
    budget.check([rest])
    return _simplify([frozenset(rest)], budget)


def eliminate(quantifier: str, var: S.Variable, body: S.Formula,
              budget: Optional[int] = DEFAULT_BUDGET) -> list:
    """DNF equivalent to ``exists var body`` or ``forall var body``."""
    node = S.Exists(var, body) if quantifier == "exists" else S.Forall(var, body)
    return to_dnf(node, True, _Budget(budget))


def dnf_to_formula(clauses: list) -> S.Formula:
    def atom(a: Atom) -> S.Formula:
        p = Poly({(): a.const})
        for v, c in a.coeffs:
            p = p + Poly.var(v).scale(c)
        return S.Cmp(a.op, p.to_term(), S.Number(0))
    return S.disj(*[S.conj(*[atom(a) for a in sorted(c, key=str)]) for c in clauses])


# ------------------------------------------------------------ satisfiability

def _order(clause) -> list:
    vs = set()
    for a in clause:
        vs |= a.vars
    return sorted(vs, key=lambda v: (v.name, v.differential))


def solve_clause(clause, budget: Optional[_Budget] = None) -> Optional[dict]:
    """A rational point satisfying every atom, or None."""
    budget = budget or _Budget(DEFAULT_BUDGET)
    order = _order(clause)
    stages = [frozenset(clause)]
    for v in order:
        nxt = _fm_clause(stages[-1], v, budget)
        if not nxt:
            return None
        stages.append(nxt[0])
    if any(a.ground() is False for a in stages[-1]):
        return None
    env: dict = {}
    for i in reversed(range(len(order))):
        v = order[i]
        env[v] = _pick(stages[i], v, env)
    for a in clause:
        if not a.holds(env):  # pragma: no cover - guards the elimination itself
            raise AssertionError(f"witness extraction failed on {a}")
    return env


def _pick(clause, v, env) -> Fraction:
    lo = hi = None
    lo_strict = hi_strict = False
    for a in clause:
        c = a.coeff(v)
        if not c:
            continue
        rest = sum((k * env.get(w, Fraction(0)) for w, k in a.coeffs if w != v), a.const)
        bound = -rest / c
        if a.op == "=":
            return bound
        strict = a.op == "<"
        if c > 0:
            if hi is None or bound < hi or (bound == hi and strict):
                hi, hi_strict = bound, strict
        else:
            if lo is None or bound > lo or (bound == lo and strict):
                lo, lo_strict = bound, strict
    zero = Fraction(0)
    if ((lo is None or lo < zero or (lo == zero and not lo_strict))
            and (hi is None or hi > zero or (hi == zero and not hi_strict))):
        return zero
    if lo is None:
        return hi - 1 if hi_strict else hi
    if hi is None:
        return lo + 1 if lo_strict else lo
    if not lo_strict:
        return lo
    if not hi_strict:
        return hi
    return (lo + hi) / 2


# ------------------------------------------------------------ validity

def free_vars(f: S.Formula) -> list:
    from .statics import fv_formula
    return fv_formula(f).sorted()


def _fresh(name: str, taken: set) -> S.Variable:
    i = 1
    while f"{name}_{i}" in taken:
        i += 1
    taken.add(f"{name}_{i}")
    return S.Variable(f"{name}_{i}")


def _rename_bound(f: S.Formula, old: S.Variable, new: S.Variable) -> S.Formula:
    def go(e):
        if isinstance(e, S.Var):
            return S.Var(new) if e.var == old else e
        if isinstance(e, (S.Forall, S.Exists)):
            if e.var == old:
                return e
            return type(e)(e.var, go(e.body))
        if isinstance(e, S.Cmp):
            return S.Cmp(e.op, go(e.left), go(e.right))
        if isinstance(e, (S.Number, S.TrueF, S.FalseF)):
            return e
        if isinstance(e, (S.Not, S.Neg)):
            return type(e)(go(e.arg))
        if isinstance(e, S.FuncApp):
            return S.FuncApp(e.name, tuple(go(a) for a in e.args))
        if isinstance(e, S.PredApp):
            return S.PredApp(e.name, tuple(go(a) for a in e.args))
        if isinstance(e, S.Differential):
            return S.Differential(go(e.arg))
        return type(e)(go(e.left), go(e.right))
    return go(f)


def valid(f: S.Formula, budget: Optional[int] = DEFAULT_BUDGET):
    """Decide validity of the universal closure of a linear formula."""
    f = S.desugar(f)
    taken = {v.name for n in S.walk(f) for v in _vars_of(n)}
    # leading universal quantifiers become free variables so that witnesses
    # report their values too
    while isinstance(f, S.Forall):
        v = f.var
        body = f.body
        if v in set(free_vars(f)):
            nv = _fresh(v.name, taken)
            body = _rename_bound(body, v, nv)
        f = body
    try:
        clauses = to_dnf(f, False, _Budget(budget))
    except Nonlinear as exc:
        return Unknown(str(exc))
    except Unsupported as exc:
        return Unknown(f"Unsupported: {exc}")
    except SizeBudgetExceeded as exc:
        return Unknown(f"SizeBudgetExceeded: {exc}")
    names = free_vars(f)
    point = _best_point(clauses)
    if point is None:
        return Valid()
    return Invalid({str(v): point.get(v, Fraction(0)) for v in names})


def _best_point(clauses, tries: int = 32) -> Optional[dict]:
    """Smallest witness among the first few satisfiable clauses."""
    best, size, seen = None, None, 0
    for c in clauses:
        point = solve_clause(c)
        if point is None:
            continue
        n = sum(abs(x) for x in point.values())
        if best is None or n < size:
            best, size = point, n
        seen += 1
        if seen >= tries or n == 0:
            break
    return best


def _vars_of(e) -> list:
    if isinstance(e, S.Var):
        return [e.var]
    if isinstance(e, (S.Forall, S.Exists)):
        return [e.var]
    return []


def satisfiable(f: S.Formula, budget: Optional[int] = DEFAULT_BUDGET):
    """A witness dict (variable name to Fraction) satisfying ``f``, or None."""
    clauses = to_dnf(S.desugar(f), True, _Budget(budget))
    names = free_vars(f)
    point = _best_point(clauses)
    if point is None:
        return None
    return {str(v): point.get(v, Fraction(0)) for v in names}


# ------------------------------------------------------------ evaluation

def evaluate(f: S.Formula, env: dict) -> bool:
    """Exact truth of a quantifier-free linear formula; ``env`` maps names to values."""
    if isinstance(f, S.TrueF):
        return True
    if isinstance(f, S.FalseF):
        return False
    if isinstance(f, S.Cmp):
        lhs = term_to_poly(f.left).evaluate(lambda v: Fraction(env.get(str(v), 0)))
        rhs = term_to_poly(f.right).evaluate(lambda v: Fraction(env.get(str(v), 0)))
        return {"=": lhs == rhs, "!=": lhs != rhs, "<": lhs < rhs, "<=": lhs <= rhs,
                ">": lhs > rhs, ">=": lhs >= rhs}[f.op]
    if isinstance(f, S.Not):
        return not evaluate(f.arg, env)
    if isinstance(f, S.And):
        return evaluate(f.left, env) and evaluate(f.right, env)
    if isinstance(f, S.Or):
        return evaluate(f.left, env) or evaluate(f.right, env)
    if isinstance(f, S.Imply):
        return not evaluate(f.left, env) or evaluate(f.right, env)
    if isinstance(f, S.Equiv):
        return evaluate(f.left, env) == evaluate(f.right, env)
    raise Unsupported(f"cannot evaluate {type(f).__name__}")


def linearize(f: S.Formula) -> list:
    """DNF clauses of a quantifier-free formula (raises Nonlinear)."""
    return to_dnf(S.desugar(f), True)


__all__ = ["Atom", "Invalid", "Nonlinear", "SizeBudgetExceeded", "Unknown", "Unsupported",
           "Valid", "dnf_to_formula", "eliminate", "evaluate", "linear_term", "linearize",
           "satisfiable", "solve_clause", "to_dnf", "valid"]
