"""Executable concrete semantics over exact rationals.

Truth values carry an exactness flag. Anything decided by sampling (quantifiers
over a finite pool, nondeterministic assignments, ODE durations) is reported
with ``exact=False`` unless the sampled evidence already settles it, e.g. a
single genuine counterexample transition. Callers that look for
falsifications must only trust exact verdicts.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

from . import arith
from . import syntax as S
from .poly import (Poly, Unsupported, forall_on_interval, isolate_roots, rational_roots,
                   cells, sign_cells, term_to_poly, u_add, u_eval, u_gcd, u_integrate, u_mul, u_trim)
from .statics import EMPTY, VarSet, bv, fv_formula, fv_term
from .usubst import Subst, apply_formula, apply_program, apply_term


class UnknownSymbol(ValueError):
    pass


# ------------------------------------------------------------ states

def _var(v) -> S.Variable:
    if isinstance(v, S.Variable):
        return v
    if v.endswith("'"):
        return S.Variable(v[:-1], True)
    return S.Variable(v)


def _compact(val):
    # integral values are kept as int, which hashes and compares much faster
    if type(val) is int:
        return val
    val = Fraction(val)
    return val.numerator if val.denominator == 1 else val


class State:
    """Total map from variables to rationals; unlisted variables are 0."""
    __slots__ = ("_m", "_h")

    def __init__(self, mapping=None):
        m = {}
        for k, val in (mapping or {}).items():
            val = _compact(val)
            if val:
                m[_var(k)] = val
        self._m = m
        self._h = None

    def get(self, v) -> Fraction:
        return self._m.get(v if type(v) is S.Variable else _var(v), 0)

    __getitem__ = get

    def set(self, v, value) -> "State":
        out = State.__new__(State)
        m = dict(self._m)
        value = _compact(value)
        v = v if type(v) is S.Variable else _var(v)
        if value:
            m[v] = value
        else:
            m.pop(v, None)
        out._m, out._h = m, None
        return out

    def update(self, mapping) -> "State":
        out = self
        for k, v in mapping.items():
            out = out.set(k, v)
        return out

    @property
    def support(self) -> frozenset:
        return frozenset(self._m)

    def agrees(self, other: "State", vs: VarSet) -> bool:
        """Equal on every variable in ``vs`` (cofinite sets included)."""
        if vs.cofinite:
            keys = (self.support | other.support) - vs.elems
        else:
            keys = vs.elems
        return all(self.get(v) == other.get(v) for v in keys)

    def diff(self, other: "State") -> set:
        return {v for v in self.support | other.support if self.get(v) != other.get(v)}

    def __eq__(self, other):
        return isinstance(other, State) and self._m == other._m

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self._m.items()))
        return self._h

    def __repr__(self):
        return "State(" + ", ".join(f"{v}={c}" for v, c in self.items()) + ")"

    def items(self):
        return sorted(self._m.items(), key=lambda kv: (kv[0].name, kv[0].differential))

    def to_json(self) -> dict:
        return {str(v): str(c) for v, c in self.items()}


# ------------------------------------------------------------ truth values

class Truth(NamedTuple):
    value: bool
    exact: bool

    def __bool__(self):
        return self.value


TRUE_EXACT = Truth(True, True)
FALSE_EXACT = Truth(False, True)


def t_not(a: Truth) -> Truth:
    return Truth(not a.value, a.exact)


def t_and(a: Truth, b: Truth) -> Truth:
    if not a.value and a.exact:
        return a
    if not b.value and b.exact:
        return b
    return Truth(a.value and b.value, a.exact and b.exact)


def t_or(a: Truth, b: Truth) -> Truth:
    return t_not(t_and(t_not(a), t_not(b)))


# ------------------------------------------------------------ configuration

@dataclass(frozen=True)
class Config:
    grid: tuple = tuple(Fraction(x) for x in ("-2", "-1", "-1/2", "0", "1/2", "1", "2", "3"))
    durations: tuple = (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2))
    loop_depth: int = 3
    max_states: int = 400
    pool_limit: int = 10


DEFAULT = Config()


@dataclass(frozen=True)
class Interp:
    """Interpretations of symbols by closed expressions over dots.

    Evaluating under an interpretation expands the symbols first, which is
    exactly their semantics: function and predicate interpretations depend on
    their arguments only, predicationals and program constants on the state.
    """
    funcs: dict = field(default_factory=dict)
    preds: dict = field(default_factory=dict)
    predicationals: dict = field(default_factory=dict)
    progs: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, rep in list(self.funcs.items()) + list(self.preds.items()):
            free = fv_term(rep) if isinstance(rep, S.TERM_TYPES) else fv_formula(rep)
            if not free.is_empty:
                raise ValueError(f"interpretation of {key[0]} must only mention dots")

    def subst(self) -> Subst:
        return Subst(dict(self.funcs), dict(self.preds), dict(self.predicationals),
                     dict(self.progs))

    def expand(self, e):
        s = self.subst()
        if s.is_empty:
            return S.desugar(e)
        if isinstance(e, S.TERM_TYPES):
            return apply_term(s, EMPTY, e)
        if isinstance(e, S.FORMULA_TYPES):
            return apply_formula(s, EMPTY, e)
        return apply_program(s, EMPTY, e)[0]


# ------------------------------------------------------------ terms

def eval_term(s: State, t: S.Term, interp: Optional[Interp] = None) -> Fraction:
    if interp is not None:
        t = interp.expand(t)
    return _term(s, t)


def _term(s: State, t: S.Term) -> Fraction:
    if isinstance(t, S.Var):
        return s.get(t.var)
    if isinstance(t, S.Number):
        return t.value
    if isinstance(t, S.Plus):
        return _term(s, t.left) + _term(s, t.right)
    if isinstance(t, S.Minus):
        return _term(s, t.left) - _term(s, t.right)
    if isinstance(t, S.Times):
        return _term(s, t.left) * _term(s, t.right)
    if isinstance(t, S.Neg):
        return -_term(s, t.arg)
    if isinstance(t, S.Differential):
        return term_to_poly(t).evaluate(s.get)
    if isinstance(t, S.FuncApp):
        raise UnknownSymbol(f"uninterpreted function symbol {t.name}")
    if isinstance(t, S.Dot):
        raise UnknownSymbol("dot outside a substitution")
    raise TypeError(f"not a term: {t!r}")


# ------------------------------------------------------------ pools

def harvest(e, extra=()) -> set:
    """Numbers mentioned in an expression and their neighbours."""
    out = set()
    for n in S.walk(e):
        if isinstance(n, S.Number):
            out.update((n.value, -n.value, n.value + 1, n.value - 1))
    out.update(Fraction(x) for x in extra)
    return out


_POOLS: dict = {}


def _pool(cfg: Config, extra) -> list:
    key = (cfg, frozenset(extra))
    hit = _POOLS.get(key)
    if hit is None:
        vals = list(dict.fromkeys(list(cfg.grid) + sorted(extra, key=lambda v: (abs(v), v))))
        hit = vals[:cfg.pool_limit + len(cfg.grid) // 2]
        if len(_POOLS) > 20000:
            _POOLS.clear()
        _POOLS[key] = hit
    return hit


# ------------------------------------------------------------ formulas

def eval_formula(s: State, f: S.Formula, interp: Optional[Interp] = None,
                 cfg: Config = DEFAULT, pool=None) -> Truth:
    if interp is not None:
        f = interp.expand(f)
    f = S.desugar(f)
    pool = harvest(f) if pool is None else set(pool)
    return _formula(s, f, cfg, pool)


def _cmp(op: str, a: Fraction, b: Fraction) -> bool:
    if op == "=":
        return a == b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    return a != b


def _formula(s: State, f: S.Formula, cfg: Config, pool: set) -> Truth:
    if isinstance(f, S.TrueF):
        return TRUE_EXACT
    if isinstance(f, S.FalseF):
        return FALSE_EXACT
    if isinstance(f, S.Cmp):
        return Truth(_cmp(f.op, _term(s, f.left), _term(s, f.right)), True)
    if isinstance(f, S.Not):
        return t_not(_formula(s, f.arg, cfg, pool))
    if isinstance(f, S.And):
        a = _formula(s, f.left, cfg, pool)
        if not a.value and a.exact:
            return a
        return t_and(a, _formula(s, f.right, cfg, pool))
    if isinstance(f, S.Or):
        a = _formula(s, f.left, cfg, pool)
        if a.value and a.exact:
            return a
        return t_or(a, _formula(s, f.right, cfg, pool))
    if isinstance(f, S.Imply):
        a = _formula(s, f.left, cfg, pool)
        if not a.value and a.exact:
            return TRUE_EXACT
        return t_or(t_not(a), _formula(s, f.right, cfg, pool))
    if isinstance(f, S.Equiv):
        a, b = _formula(s, f.left, cfg, pool), _formula(s, f.right, cfg, pool)
        return Truth(a.value == b.value, a.exact and b.exact)
    if isinstance(f, (S.Forall, S.Exists)):
        want = isinstance(f, S.Exists)
        values = _pool(cfg, pool | {s.get(f.var)})
        exact = True
        for v in values:
            r = _formula(s.set(f.var, v), f.body, cfg, pool)
            if r.value == want and r.exact:
                return Truth(want, True)
            exact = False
        return Truth(not want, False)
    if isinstance(f, S.Box):
        if isinstance(f.program, S.ODE):
            r = _box_ode(f.program, s, f.body)
            if r is not None:
                return r
        trans, complete = transitions(f.program, s, cfg, pool)
        exact = complete
        for w, ex in trans:
            r = _formula(w, f.body, cfg, pool)
            if not r.value and r.exact and ex:
                return FALSE_EXACT
            exact = exact and ex and r.exact and r.value
        return Truth(True, exact)
    if isinstance(f, S.Refines):
        return refines(s, f.left, f.right, cfg, pool)
    if isinstance(f, (S.PredApp, S.Predicational)):
        raise UnknownSymbol(f"uninterpreted predicate {f.name}")
    raise TypeError(f"not a desugared formula: {f!r}")


def refines(s: State, a: S.Program, b: S.Program, cfg: Config = DEFAULT, pool=()) -> Truth:
    """Truth of ``a refines b`` at ``s``; exact False comes with a genuine witness."""
    w, exact = _refinement(s, a, b, cfg, set(pool))
    if w is not None:
        return FALSE_EXACT
    return Truth(True, exact)


def refinement_witness(s: State, a: S.Program, b: S.Program, cfg: Config = DEFAULT,
                       pool=()) -> Optional[State]:
    """A final state reached by ``a`` (exactly) that ``b`` provably cannot reach."""
    return _refinement(s, a, b, cfg, set(pool))[0]


def _refinement(s: State, a: S.Program, b: S.Program, cfg: Config, pool: set):
    """``(witness or None, every a-transition exactly covered by b)``."""
    trans, exact = transitions(a, s, cfg, pool)
    # b's own sampled transitions answer most membership questions at once
    known, b_complete = transitions(b, s, cfg, pool)
    known = dict(known)
    pending = []
    for t, ex in trans:
        hit = known.get(t)
        if hit:
            exact = exact and ex
            continue
        if ex and b_complete and hit is None:
            return t, False
        pending.append((t, ex))
    for t, ex in pending:
        r = reach(b, s, t, cfg, pool)
        if ex and r.exact and not r.value:
            return t, False
        exact = exact and ex and r.exact and r.value
    return None, exact


# ------------------------------------------------------------ ODE solutions

def _compose(p: Poly, mapping: dict, s: State) -> list:
    """Univariate polynomial in time obtained by plugging ``mapping`` into ``p``."""
    out: list = []
    for mono, c in p.terms.items():
        acc = [Fraction(c)]
        for v, e in mono:
            base = mapping.get(v)
            if base is None:
                base = [s.get(v)]
            for _ in range(e):
                acc = u_mul(acc, base)
        out = u_add(out, acc)
    return u_trim(out)


_RHS: dict = {}


def _ode_rhs(ode: S.ODE) -> dict:
    hit = _RHS.get(id(ode))
    if hit is not None and hit[0] is ode:
        return hit[1]
    rhs = {}
    for v, t in ode.eqs:
        rhs[v] = term_to_poly(t)
        if any(w.differential for w in rhs[v].vars()):
            raise Unsupported("right-hand side mentions differential symbols")
    if len(_RHS) > 20000:
        _RHS.clear()
    _RHS[id(ode)] = (ode, rhs)
    return rhs


class OdeSolution:
    """Closed-form flow of an ODE with acyclic polynomial dependencies."""

    def __init__(self, ode: S.ODE, s: State):
        self.ode, self.start = ode, s
        self.rhs = rhs = _ode_rhs(ode)
        order, seen, busy = [], set(), set()
        odevars = set(rhs)

        def visit(v):
            if v in seen:
                return
            if v in busy:
                raise Unsupported("cyclic ODE dependencies")
            busy.add(v)
            for w in rhs[v].vars() & odevars:
                visit(w)
            busy.discard(v)
            seen.add(v)
            order.append(v)

        for v in sorted(odevars, key=lambda v: v.name):
            visit(v)
        sol: dict = {}
        for v in order:
            rate = _compose(rhs[v], sol, s)
            sol[v] = u_add(u_integrate(rate), [s.get(v)])
        self.sol = sol
        self.rates = {v.prime(): _compose(rhs[v], sol, s) for v in order}
        self.paths = dict(sol)
        self.paths.update(self.rates)
        self._exit_cache = False
        self._points: list = []

    def state_at(self, r: Fraction) -> State:
        out = {v: u_eval(p, r) for v, p in self.paths.items()}
        return self.start.update(out)

    def _exit(self):
        """``(cut, closed)``: the domain holds on [0, cut) (and at cut when closed).

        None means no exact answer; ``cut`` None means the domain never fails.
        """
        if self._exit_cache is not False:
            return self._exit_cache
        dom = self.ode.domain
        atoms: list = []
        out = None
        if _collect_atoms(dom, atoms):
            try:
                polys = [_compose(term_to_poly(a.left) - term_to_poly(a.right),
                                  self.paths, self.start) for a in atoms]
            except Unsupported:
                polys = None
            if polys is not None:
                out = (None, True)
                found = cells(polys, Fraction(0))
                self._points = [w.a for k, w, _ in found if k == "point" and w.rational]
                for kind, where, signs in found:
                    if not _eval_signs(dom, dict(zip(atoms, signs))):
                        if kind == "point":
                            out = (where, False)
                        else:
                            # fails right after the left cut
                            out = (where[0], True)
                        break
        self._exit_cache = out
        return out

    def domain_holds(self, r: Fraction, cfg: Config, pool: set) -> Truth:
        """Whether the domain holds on the whole interval [0, r]."""
        ex = self._exit()
        if ex is not None:
            cut, closed = ex
            if cut is None:
                return TRUE_EXACT
            c = cut.compare(r)
            return Truth(c < 0 or (c == 0 and closed), True)
        # fall back to sampling the interval
        for k in range(9):
            v = _formula(self.state_at(r * k / 8), self.ode.domain, cfg, pool)
            if not v.value and v.exact:
                return FALSE_EXACT
        return Truth(True, False)

    def boundary_times(self, hi: Fraction) -> list:
        """Rational times in (0, hi] where a domain atom changes sign."""
        self._exit()
        return [r for r in self._points if 0 < r <= hi]


def _collect_atoms(f: S.Formula, out: list) -> bool:
    """Comparison atoms of a quantifier-free, modality-free formula."""
    if isinstance(f, (S.TrueF, S.FalseF)):
        return True
    if isinstance(f, S.Cmp):
        if f not in out:
            out.append(f)
        return True
    if isinstance(f, S.Not):
        return _collect_atoms(f.arg, out)
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return _collect_atoms(f.left, out) and _collect_atoms(f.right, out)
    return False


def _eval_signs(f: S.Formula, signs: dict) -> bool:
    if isinstance(f, S.TrueF):
        return True
    if isinstance(f, S.FalseF):
        return False
    if isinstance(f, S.Cmp):
        return _cmp(f.op, Fraction(signs[f]), Fraction(0))
    if isinstance(f, S.Not):
        return not _eval_signs(f.arg, signs)
    a, b = _eval_signs(f.left, signs), _eval_signs(f.right, signs)
    if isinstance(f, S.And):
        return a and b
    if isinstance(f, S.Or):
        return a or b
    if isinstance(f, S.Imply):
        return (not a) or b
    return a == b


def _box_ode(ode: S.ODE, s: State, body: S.Formula) -> Optional[Truth]:
    """Exact ``[ode]body`` for arithmetic body and domain along a polynomial flow.

    Time is split into sign-invariant cells; cells are visited in order until
    the domain fails, and the body must hold on every cell visited before.
    """
    dom_atoms: list = []
    body_atoms: list = []
    if not (_collect_atoms(ode.domain, dom_atoms) and _collect_atoms(body, body_atoms)):
        return None
    sol = _solve(ode, s)
    if sol is None:
        return None
    atoms = dom_atoms + [a for a in body_atoms if a not in dom_atoms]
    try:
        polys = [_compose(term_to_poly(a.left) - term_to_poly(a.right), sol.paths, s)
                 for a in atoms]
    except Unsupported:
        return None
    for signs in sign_cells(polys, Fraction(0)):
        env = dict(zip(atoms, signs))
        if not _eval_signs(ode.domain, env):
            return TRUE_EXACT
        if not _eval_signs(body, env):
            return FALSE_EXACT
    return TRUE_EXACT


_SOLUTIONS: dict = {}


def _solve(ode: S.ODE, s: State) -> Optional[OdeSolution]:
    key = (id(ode), s)
    hit = _SOLUTIONS.get(key)
    if hit is not None and hit[0] is ode:
        return hit[1]
    try:
        sol = OdeSolution(ode, s)
    except Unsupported:
        sol = None
    if len(_SOLUTIONS) > 20000:
        _SOLUTIONS.clear()
    _SOLUTIONS[key] = (ode, sol)
    return sol


# ------------------------------------------------------------ transitions

def transitions(p: S.Program, s: State, cfg: Config = DEFAULT, pool=()):
    """Sampled final states: ``(list of (State, exact), complete)``.

    ``complete`` means the list is the entire transition relation from ``s``.
    """
    pool = set(pool)
    out: dict = {}
    complete = _trans(p, s, cfg, pool, out)
    return list(out.items()), complete


def _add(out: dict, w: State, exact: bool):
    out[w] = out.get(w, False) or exact


class WorkBudgetExceeded(RuntimeError):
    """Raised when an evaluation exceeds the work limit set by ``work_limit``."""


_WORK = [0, None]
_TRANS: dict = {}


def work_limit(limit: Optional[int]):
    """Bound the number of transition and reachability steps until the next call."""
    _WORK[0], _WORK[1] = 0, limit


def _tick():
    _WORK[0] += 1
    if _WORK[1] is not None and _WORK[0] > _WORK[1]:
        raise WorkBudgetExceeded(f"more than {_WORK[1]} oracle steps")


def _trans(p: S.Program, s: State, cfg: Config, pool: set, out: dict) -> bool:
    if isinstance(p, (S.Test, S.Assign)):
        return _trans_raw(p, s, cfg, pool, out)
    key = (id(p), s, cfg, frozenset(pool))
    hit = _TRANS.get(key)
    if hit is None or hit[0] is not p:
        sub: dict = {}
        complete = _trans_raw(p, s, cfg, pool, sub)
        hit = (p, tuple(sub.items()), complete)
        if len(_TRANS) > 5000:
            _TRANS.clear()
        _TRANS[key] = hit
    for w, ex in hit[1]:
        _add(out, w, ex)
    return hit[2]


def _trans_raw(p: S.Program, s: State, cfg: Config, pool: set, out: dict) -> bool:
    _tick()
    if len(out) > cfg.max_states:
        return False
    if isinstance(p, S.Test):
        r = _formula(s, p.cond, cfg, pool)
        if r.value:
            _add(out, s, r.exact)
        return r.exact
    if isinstance(p, S.Assign):
        _add(out, s.set(p.var, _term(s, p.term)), True)
        return True
    if isinstance(p, S.AssignAny):
        for v in _pool(cfg, pool | {s.get(p.var)}):
            _add(out, s.set(p.var, v), True)
        return False
    if isinstance(p, S.Choice):
        a = _trans(p.left, s, cfg, pool, out)
        b = _trans(p.right, s, cfg, pool, out)
        return a and b
    if isinstance(p, S.Seq):
        mid: dict = {}
        complete = _trans(p.left, s, cfg, pool, mid)
        for m, ex in mid.items():
            sub: dict = {}
            complete = _trans(p.right, m, cfg, pool, sub) and complete
            for w, ex2 in sub.items():
                _add(out, w, ex and ex2)
            if len(out) > cfg.max_states:
                return False
        return complete
    if isinstance(p, S.Loop):
        frontier = {s: True}
        seen = {s: True}
        complete = True
        for _ in range(cfg.loop_depth):
            nxt: dict = {}
            for m, ex in frontier.items():
                sub: dict = {}
                complete = _trans(p.body, m, cfg, pool, sub) and complete
                for w, ex2 in sub.items():
                    e = ex and ex2
                    if w not in seen or (e and not seen[w]):
                        nxt[w] = e
            for w, e in nxt.items():
                seen[w] = seen.get(w, False) or e
            frontier = nxt
            if not frontier:
                break
        else:
            complete = complete and not frontier
        for w, e in seen.items():
            _add(out, w, e)
        return complete
    if isinstance(p, S.ODE):
        sol = _solve(p, s)
        if sol is None:
            return False
        times = set(cfg.durations)
        times.update(sol.boundary_times(max(cfg.durations)))
        ex = sol._exit()
        if ex is not None and ex[0] is not None and not ex[0].rational:
            # a moment shortly before an irrational exit
            below = ex[0].below(Fraction(1, 16))
            if below > 0:
                times.add(below)
        for r in sorted(times):
            d = sol.domain_holds(r, cfg, pool)
            if d.value:
                _add(out, sol.state_at(r), d.exact)
            elif d.exact:
                break
        return False
    if isinstance(p, S.ProgConst):
        raise UnknownSymbol(f"uninterpreted program constant {p.name}")
    raise TypeError(f"not a program: {p!r}")


# ------------------------------------------------------------ reachability

def reach(p: S.Program, s: State, target: State, cfg: Config = DEFAULT, pool=()) -> Truth:
    """Is ``(s, target)`` a transition of ``p``?"""
    pool = set(pool) | {v for _, v in target.items()} | {v for _, v in s.items()}
    return _reach(p, s, target, cfg, pool)


_DISCRETE: dict = {}


def _is_discrete(p: S.Program) -> bool:
    hit = _DISCRETE.get(id(p))
    if hit is not None and hit[0] is p:
        return hit[1]
    val = not any(isinstance(n, (S.ODE, S.Loop, S.ProgConst, S.Box, S.Refines))
                  for n in S.walk(p))
    if len(_DISCRETE) > 20000:
        _DISCRETE.clear()
    _DISCRETE[id(p)] = (p, val)
    return val


def _reach(p: S.Program, s: State, target: State, cfg: Config, pool: set) -> Truth:
    _tick()
    if _is_discrete(p):
        r = reach_symbolic(p, s, target)
        if r is not None:
            return r
    if isinstance(p, S.Test):
        if s != target:
            return FALSE_EXACT
        return _formula(s, p.cond, cfg, pool)
    if isinstance(p, S.Assign):
        return Truth(s.set(p.var, _term(s, p.term)) == target, True)
    if isinstance(p, S.AssignAny):
        return Truth(s.set(p.var, target.get(p.var)) == target, True)
    if isinstance(p, S.Choice):
        a = _reach(p.left, s, target, cfg, pool)
        if a.value and a.exact:
            return a
        return t_or(a, _reach(p.right, s, target, cfg, pool))
    if isinstance(p, S.ODE):
        return _reach_ode(p, s, target, cfg, pool)
    if isinstance(p, S.Seq):
        if isinstance(p.right, S.Test):
            # a test at the end leaves the state alone
            return t_and(_formula(target, p.right.cond, cfg, pool),
                         _reach(p.left, s, target, cfg, pool))
        mid: dict = {}
        complete = _trans(p.left, s, cfg, pool, mid)
        for cand in _backward(p.right, target, cfg, pool):
            if cand not in mid:
                r = _reach(p.left, s, cand, cfg, pool)
                if r.value:
                    mid[cand] = r.exact
        exact = complete
        for m, ex in mid.items():
            r = _reach(p.right, m, target, cfg, pool)
            if r.value and r.exact and ex:
                return TRUE_EXACT
            exact = exact and ex and r.exact
        return Truth(False, exact)
    if isinstance(p, S.Loop):
        frontier, seen = {s: True}, {s: True}
        if s == target:
            return TRUE_EXACT
        complete = True
        for _ in range(cfg.loop_depth):
            nxt: dict = {}
            for m, ex in frontier.items():
                r = _reach(p.body, m, target, cfg, pool)
                if r.value and r.exact and ex:
                    return TRUE_EXACT
                sub: dict = {}
                complete = _trans(p.body, m, cfg, pool, sub) and complete
                for w, ex2 in sub.items():
                    if w not in seen:
                        nxt[w] = ex and ex2
            seen.update(nxt)
            frontier = nxt
            if not frontier:
                return Truth(False, complete)
        return Truth(False, False)
    if isinstance(p, S.ProgConst):
        raise UnknownSymbol(f"uninterpreted program constant {p.name}")
    raise TypeError(f"not a program: {p!r}")


def _backward(p: S.Program, target: State, cfg: Config, pool: set) -> list:
    """Candidate intermediate states from which ``p`` might reach ``target``."""
    if isinstance(p, S.Test):
        return [target]
    if isinstance(p, (S.Assign, S.AssignAny)):
        return [target.set(p.var, v) for v in _pool(cfg, pool | {target.get(p.var)})]
    if isinstance(p, S.ODE):
        return [target]
    if isinstance(p, S.Seq):
        out = []
        for m in _backward(p.right, target, cfg, pool)[:8]:
            out.extend(_backward(p.left, m, cfg, pool)[:8])
        return out
    if isinstance(p, S.Choice):
        return _backward(p.left, target, cfg, pool) + _backward(p.right, target, cfg, pool)
    return [target]


def _reach_ode(p: S.ODE, s: State, target: State, cfg: Config, pool: set) -> Truth:
    sol = _solve(p, s)
    if sol is None:
        return Truth(False, False)
    moved = set(sol.paths)
    for v in s.support | target.support:
        if v not in moved and s.get(v) != target.get(v):
            return FALSE_EXACT
    # durations at which every solution coordinate hits its target value
    common: list = []
    zero = True
    for v, path in sol.paths.items():
        q = u_trim(u_add(path, [-target.get(v)]))
        if q:
            zero = False
            common = q if not common else u_gcd(common, q)
            if len(common) == 1:
                return FALSE_EXACT
    if zero:
        return sol.domain_holds(Fraction(0), cfg, pool)
    found = rational_roots(common)
    if found is None:
        return Truth(False, False)
    roots, rest = found
    for r in roots:
        if r >= 0:
            d = sol.domain_holds(r, cfg, pool)
            if d.value and d.exact:
                return TRUE_EXACT
            if not d.exact:
                return Truth(False, False)
    if len(rest) > 1:
        # an irrational duration may still hit the target, but the domain
        # cannot be checked there exactly, so the question stays open
        _, intervals, _ = isolate_roots(rest, Fraction(0), _root_bound(rest))
        if intervals:
            return Truth(False, False)
    return FALSE_EXACT


def _root_bound(p: list) -> Fraction:
    lead = abs(p[-1])
    return 1 + max((abs(c) / lead for c in p[:-1]), default=Fraction(0))


# ------------------------------------------------------------ symbolic reach

class _NotLinear(Exception):
    pass


def _fresh_names(p: S.Program):
    taken = {n.var.name for n in S.walk(p) if isinstance(n, S.Var)}
    i = 0
    while True:
        i += 1
        name = f"rnd{i}"
        if name not in taken:
            yield S.Variable(name)


def _poly_formula(f: S.Formula, env: dict, s: State, bound: frozenset = frozenset()) -> S.Formula:
    """Replace program variables by their symbolic values."""
    if isinstance(f, (S.TrueF, S.FalseF)):
        return f
    if isinstance(f, S.Cmp):
        return S.Cmp(f.op, _poly_term(f.left, env, s, bound).to_term(),
                     _poly_term(f.right, env, s, bound).to_term())
    if isinstance(f, S.Not):
        return S.Not(_poly_formula(f.arg, env, s, bound))
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return type(f)(_poly_formula(f.left, env, s, bound), _poly_formula(f.right, env, s, bound))
    if isinstance(f, (S.Forall, S.Exists)):
        return type(f)(f.var, _poly_formula(f.body, env, s, bound | {f.var}))
    raise _NotLinear(type(f).__name__)


def _poly_term(t: S.Term, env: dict, s: State, bound: frozenset) -> Poly:
    p = term_to_poly(t)
    mapping = {}
    for v in p.vars():
        if v in bound:
            continue
        mapping[v] = env[v] if v in env else Poly.const(s.get(v))
    return p.substitute(mapping)


def _paths(p: S.Program, env: dict, cons: list, s: State, names):
    if isinstance(p, S.Test):
        yield env, cons + [_poly_formula(p.cond, env, s)]
    elif isinstance(p, S.Assign):
        e = dict(env)
        e[p.var] = _poly_term(p.term, env, s, frozenset())
        yield e, cons
    elif isinstance(p, S.AssignAny):
        e = dict(env)
        e[p.var] = Poly.var(next(names))
        yield e, cons
    elif isinstance(p, S.Choice):
        yield from _paths(p.left, env, cons, s, names)
        yield from _paths(p.right, env, cons, s, names)
    elif isinstance(p, S.Seq):
        for e, c in _paths(p.left, env, cons, s, names):
            yield from _paths(p.right, e, c, s, names)
    else:
        raise _NotLinear(type(p).__name__)


def reach_symbolic(p: S.Program, s: State, target: State, budget: int = 256) -> Optional[Truth]:
    """Exact reachability for loop-free discrete programs by symbolic execution.

    Nondeterministic assignments become fresh unknowns; each path yields a
    constraint system that the arithmetic backend decides. Returns None when a
    path leaves linear arithmetic.
    """
    names = _fresh_names(p)
    written = bv(p)
    if written.cofinite:
        return None
    for v in s.diff(target):
        if v not in written:
            return FALSE_EXACT
    count = 0
    try:
        for env, cons in _paths(p, {}, [], s, names):
            count += 1
            if count > budget:
                return None
            goals = list(cons)
            for v in written.elems:
                val = env[v] if v in env else Poly.const(s.get(v))
                goals.append(S.Cmp("=", val.to_term(), S.Number(target.get(v))))
            f = S.conj(*goals)
            try:
                if arith.satisfiable(f) is not None:
                    return TRUE_EXACT
            except (arith.Nonlinear, Unsupported, arith.SizeBudgetExceeded):
                return None
    except (_NotLinear, Unsupported):
        return None
    return FALSE_EXACT


# ------------------------------------------------------------ falsification

@dataclass(frozen=True)
class Counterexample:
    initial: State
    final: State

    def to_json(self):
        return {"initial": self.initial.to_json(), "final": self.final.to_json()}


def random_state(rng: random.Random, names, values=None) -> State:
    values = values or [Fraction(n, d) for n in range(-4, 5) for d in (1, 2)]
    return State({v: rng.choice(values) for v in names})


def falsify_refinement(a: S.Program, b: S.Program, trials: int = 50, seed: int = 0,
                       interp: Optional[Interp] = None, cfg: Config = DEFAULT,
                       names=None) -> Optional[Counterexample]:
    """Search random initial states for an exact ``a`` transition that ``b`` cannot make."""
    if interp is not None:
        a, b = interp.expand(a), interp.expand(b)
    a, b = S.desugar(a), S.desugar(b)
    rng = random.Random(seed)
    if names is None:
        vs = set()
        for prog in (a, b):
            for n in S.walk(prog):
                if isinstance(n, S.Var):
                    vs.add(n.var)
                elif isinstance(n, (S.Assign, S.AssignAny)):
                    vs.add(n.var)
        names = sorted(vs, key=lambda v: (v.name, v.differential))
    pool = harvest(a) | harvest(b)
    for _ in range(trials):
        s = random_state(rng, names)
        w = refinement_witness(s, a, b, cfg, pool)
        if w is not None:
            return Counterexample(s, w)
    return None


def replay(a: S.Program, b: S.Program, cex: Counterexample, cfg: Config = DEFAULT) -> bool:
    """The witness transition belongs to ``a`` and not to ``b``."""
    ra = reach(a, cex.initial, cex.final, cfg)
    rb = reach(b, cex.initial, cex.final, cfg)
    return ra.value and ra.exact and not rb.value
