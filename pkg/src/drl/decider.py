"""Decision procedures for refinement of loop-free discrete programs and for
the ctrl;plant loop pattern.

A loop-free discrete program (tests, assignments, nondeterministic assignments,
choice, sequence) is normalized to the canonical shape

    x+ := x;  x := *;  ?psi(x+, x)

where ``x`` ranges over the bound variables and ``x+`` are fresh ghost copies
holding the initial values. ``psi`` is computed path by path as a strongest
postcondition: a test adds a conjunct, an assignment renames the old value to
an existential witness, and one-point elimination removes witnesses that are
pinned by an equation. Refinement of two canonical forms over the same
variables reduces to validity of ``psi_a -> psi_b``, which the linear
arithmetic backend decides.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import arith
from . import syntax as S
from .oracle import State
from .poly import Poly, Unsupported, term_to_poly
from .statics import VarSet, bv, fv_formula, fv_term

DEFAULT_BRANCH_BUDGET = 256


class BranchBudgetExceeded(RuntimeError):
    pass


# ------------------------------------------------------------ verdicts

@dataclass(frozen=True)
class Valid:
    trail: tuple = ()

    status = "valid"

    def to_json(self):
        return {"verdict": "Valid", "axioms_used": list(self.trail)}


@dataclass(frozen=True)
class Invalid:
    initial: State
    final: State
    reason: str = ""

    status = "invalid"

    def to_json(self):
        out = {"verdict": "Invalid",
               "witness": {"initial": self.initial.to_json(), "final": self.final.to_json()}}
        if self.reason:
            out["reason"] = self.reason
        return out


@dataclass(frozen=True)
class Unknown:
    reason: str

    status = "unknown"

    def to_json(self):
        return {"verdict": "Unknown", "reason": self.reason}


# ------------------------------------------------------------ substitution

def _subst_term(t: S.Term, x: S.Variable, r: S.Term) -> S.Term:
    if isinstance(t, S.Var):
        return r if t.var == x else t
    if isinstance(t, (S.Number, S.Dot)):
        return t
    if isinstance(t, S.Neg):
        return S.Neg(_subst_term(t.arg, x, r))
    if isinstance(t, S.FuncApp):
        return S.FuncApp(t.name, tuple(_subst_term(a, x, r) for a in t.args))
    if isinstance(t, S.Differential):
        raise Unsupported("differential term in a discrete program")
    return type(t)(_subst_term(t.left, x, r), _subst_term(t.right, x, r))


def _subst(f: S.Formula, x: S.Variable, r: S.Term) -> S.Formula:
    """Replace free occurrences of ``x``; ``r`` only mentions fresh or ghost names."""
    if isinstance(f, (S.TrueF, S.FalseF)):
        return f
    if isinstance(f, S.Cmp):
        return S.Cmp(f.op, _subst_term(f.left, x, r), _subst_term(f.right, x, r))
    if isinstance(f, S.PredApp):
        return S.PredApp(f.name, tuple(_subst_term(a, x, r) for a in f.args))
    if isinstance(f, S.Not):
        return S.Not(_subst(f.arg, x, r))
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return type(f)(_subst(f.left, x, r), _subst(f.right, x, r))
    if isinstance(f, (S.Forall, S.Exists)):
        if f.var == x:
            return f
        return type(f)(f.var, _subst(f.body, x, r))
    raise Unsupported(f"{type(f).__name__} inside a test")


def _conjuncts(f: S.Formula) -> list:
    if isinstance(f, S.And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    if isinstance(f, S.TrueF):
        return []
    return [f]


# ------------------------------------------------------------ normalization

_ATOMIC = (S.Test, S.Assign, S.AssignAny)


def is_discrete(p: S.Program) -> bool:
    """Loop-free and built from tests and (nondeterministic) assignments only."""
    if isinstance(p, _ATOMIC):
        return True
    if isinstance(p, (S.Choice, S.Seq)):
        return is_discrete(p.left) and is_discrete(p.right)
    return False


def _paths(p: S.Program, budget: int) -> list:
    """Straight-line sequences of atomic steps, one per choice resolution."""
    if isinstance(p, _ATOMIC):
        return [(p,)]
    if isinstance(p, S.Choice):
        out = _paths(p.left, budget) + _paths(p.right, budget)
    elif isinstance(p, S.Seq):
        left = _paths(p.left, budget)
        right = _paths(p.right, budget)
        if len(left) * len(right) > budget:
            raise BranchBudgetExceeded(f"more than {budget} branches")
        out = [a + b for a in left for b in right]
    else:
        raise Unsupported(f"{type(p).__name__} is not a discrete loop-free program")
    if len(out) > budget:
        raise BranchBudgetExceeded(f"more than {budget} branches")
    return out


def _names(*es) -> set:
    out = set()
    for e in es:
        for n in S.walk(e):
            if isinstance(n, S.Var):
                out.add(n.var.name)
            elif isinstance(n, (S.Assign, S.AssignAny, S.Forall, S.Exists)):
                out.add(n.var.name)
            elif isinstance(n, S.ODE):
                out.update(v.name for v in n.vars)
    return out


def ghost_names(vs, taken: set) -> dict:
    """Ghost ``x_p`` for each variable (``x_p'`` for ``x'``), avoiding ``taken``."""
    out, used = {}, set(taken)
    for base in sorted({v.name for v in vs}):
        name, i = f"{base}_p", 0
        while name in used:
            i += 1
            name = f"{base}_p{i}"
        used.add(name)
        out[base] = name
    return {v: S.Variable(out[v.name], v.differential) for v in vs}


class _Fresh:
    def __init__(self, taken: set):
        self.taken = set(taken)
        self.n = 0

    def __call__(self) -> S.Variable:
        while True:
            name = "z" if self.n == 0 else f"z{self.n}"
            self.n += 1
            if name not in self.taken:
                self.taken.add(name)
                return S.Variable(name)


def _onepoint(conj: list, ex: list) -> tuple:
    """Drop existential witnesses fixed by an equation ``z = e``."""
    changed = True
    while changed:
        changed = False
        for z in list(ex):
            for i, c in enumerate(conj):
                if not isinstance(c, S.Cmp) or c.op != "=":
                    continue
                if c.left == S.Var(z) and z not in fv_term(c.right):
                    val = c.right
                elif c.right == S.Var(z) and z not in fv_term(c.left):
                    val = c.left
                else:
                    continue
                conj = [_subst(d, z, val) for j, d in enumerate(conj) if j != i]
                ex = [w for w in ex if w != z]
                changed = True
                break
            if changed:
                break
    return conj, ex


def _path_formula(path: tuple, vs: list, ghosts: dict, fresh: _Fresh) -> S.Formula:
    conj = [S.Cmp("=", S.Var(x), S.Var(ghosts[x])) for x in vs]
    ex: list = []
    for step in path:
        if isinstance(step, S.Test):
            conj.extend(_conjuncts(step.cond))
            continue
        z = fresh()
        conj = [_subst(c, step.var, S.Var(z)) for c in conj]
        ex.append(z)
        if isinstance(step, S.Assign):
            conj.append(S.Cmp("=", S.Var(step.var), _subst_term(step.term, step.var, S.Var(z))))
        conj, ex = _onepoint(conj, ex)
    if any(isinstance(c, S.FalseF) for c in conj):
        return S.FALSE
    body = S.conj(*conj) if conj else S.TRUE
    used = fv_formula(body)
    for z in reversed(ex):
        if z in used:
            body = S.Exists(z, body)
    return body


@dataclass(frozen=True)
class CanonicalForm:
    """``x+ := x; x := *; ?psi`` over ``vars`` with ghosts ``x+``."""
    vars: tuple
    ghosts: dict = field(hash=False)
    psi: S.Formula

    def program(self) -> S.Program:
        parts = [S.Assign(self.ghosts[x], S.Var(x)) for x in self.vars]
        parts += [S.AssignAny(x) for x in self.vars]
        parts.append(S.Test(self.psi))
        return S.seq(*parts)

    def __str__(self):
        return S.pretty(self.psi)


def normalize(p: S.Program, vs=None, ghosts: Optional[dict] = None,
              budget: int = DEFAULT_BRANCH_BUDGET, taken: Optional[set] = None) -> CanonicalForm:
    """Canonical form of a loop-free discrete program.

    ``vs`` pads the bound variables (variables in ``vs`` that ``p`` leaves alone
    keep their ghost value); ``ghosts`` and ``taken`` let two programs share
    ghost names.
    """
    if isinstance(p, str):
        p = S.parse_program(p)
    p = S.desugar(p)
    if not is_discrete(p):
        raise Unsupported("normalization needs a loop-free discrete program")
    own = bv(p)
    vs = sorted(set(own.elems) | set(vs or ()), key=lambda v: (v.name, v.differential))
    taken = set(taken or ()) | _names(p)
    if ghosts is None:
        ghosts = ghost_names(vs, taken)
    taken |= {g.name for g in ghosts.values()}
    fresh = _Fresh(taken)
    paths = _paths(p, budget)
    psi = S.disj(*[f for f in (_path_formula(q, vs, ghosts, fresh) for q in paths)
                   if not isinstance(f, S.FalseF)]) if paths else S.FALSE
    return CanonicalForm(tuple(vs), dict(ghosts), psi)


# ------------------------------------------------------------ discrete refinement

def _state(values: dict, names) -> State:
    return State({v: values.get(str(v), Fraction(0)) for v in names})


def _witness(w: dict, vs, ghosts: dict, extra_names) -> tuple:
    """Initial and final states from an arithmetic counterexample."""
    params = {}
    for name, val in w.items():
        params[name] = val
    init = {}
    for v in extra_names:
        init[v] = params.get(str(v), Fraction(0))
    for x in vs:
        init[x] = params.get(str(ghosts[x]), Fraction(0))
    final = dict(init)
    for x in vs:
        final[x] = params.get(str(x), Fraction(0))
    return State(init), State(final)


def _program_vars(*ps) -> list:
    out = set()
    for p in ps:
        for n in S.walk(p):
            if isinstance(n, S.Var):
                out.add(n.var)
            elif isinstance(n, (S.Assign, S.AssignAny)):
                out.add(n.var)
            elif isinstance(n, S.ODE):
                out.update(n.vars)
                out.update(v.prime() for v in n.vars)
    return sorted(out, key=lambda v: (v.name, v.differential))


def _shared_forms(a: S.Program, b: S.Program, budget: int):
    vs = sorted(set(bv(a).elems) | set(bv(b).elems), key=lambda v: (v.name, v.differential))
    taken = _names(a, b)
    ghosts = ghost_names(vs, taken)
    taken |= {g.name for g in ghosts.values()}
    ca = normalize(a, vs, ghosts, budget, taken)
    cb = normalize(b, vs, ghosts, budget, taken | _names(ca.psi))
    return vs, ghosts, ca, cb


def decide_discrete(a, b, budget: int = DEFAULT_BRANCH_BUDGET):
    """Decide ``a refines b`` for loop-free discrete programs in linear arithmetic."""
    a = S.desugar(S.parse_program(a) if isinstance(a, str) else a)
    b = S.desugar(S.parse_program(b) if isinstance(b, str) else b)
    try:
        vs, ghosts, ca, cb = _shared_forms(a, b, budget)
    except BranchBudgetExceeded as exc:
        return Unknown(f"BranchBudgetExceeded: {exc}")
    except Unsupported as exc:
        return Unknown(f"Unsupported: {exc}")
    r = arith.valid(S.Imply(ca.psi, cb.psi))
    if r.status == "valid":
        return Valid(("normalize", "arith"))
    if r.status == "unknown":
        return Unknown(r.reason)
    others = [v for v in _program_vars(a, b) if v not in vs]
    extra = [S.Variable(n) for n in r.witness
             if S.Variable(n) not in vs and n not in {str(g) for g in ghosts.values()}]
    init, final = _witness(r.witness, vs, ghosts, sorted(set(others) | set(extra),
                                                         key=lambda v: (v.name, v.differential)))
    return Invalid(init, final, "transition of the left program that the right cannot make")


def is_idempotent(c, budget: int = DEFAULT_BRANCH_BUDGET):
    """``c; c`` and ``c`` have the same transitions."""
    c = S.desugar(S.parse_program(c) if isinstance(c, str) else c)
    twice = S.Seq(c, c)
    fwd = decide_discrete(twice, c, budget)
    if fwd.status != "valid":
        return fwd
    back = decide_discrete(c, twice, budget)
    if back.status != "valid":
        return back
    return Valid(("normalize", "arith"))


# ------------------------------------------------------------ loops

@dataclass(frozen=True)
class LoopModel:
    """``(ctrl_a; plant_a)*`` against ``(ctrl_b; plant_b)*``."""
    ctrl_a: S.Program
    plant_a: S.ODE
    ctrl_b: S.Program
    plant_b: S.ODE
    vars: tuple = ()

    def left(self) -> S.Program:
        return S.Loop(S.Seq(self.ctrl_a, self.plant_a))

    def right(self) -> S.Program:
        return S.Loop(S.Seq(self.ctrl_b, self.plant_b))


_SECTIONS = ("vars", "ctrl_a", "plant_a", "ctrl_b", "plant_b")


def parse_model(text: str) -> LoopModel:
    """Read the ``vars:/ctrl_a:/plant_a:/ctrl_b:/plant_b:`` format."""
    parts: dict = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = re.match(r"\s*(\w+)\s*:(?!=)(.*)$", line)
        if m and m.group(1) in _SECTIONS:
            current = m.group(1)
            if current in parts:
                raise ValueError(f"duplicate section {current}")
            parts[current] = m.group(2).strip()
        elif current is None:
            raise ValueError(f"text outside a section: {line.strip()!r}")
        else:
            parts[current] += " " + line.strip()
    missing = [k for k in _SECTIONS[1:] if k not in parts]
    if missing:
        raise ValueError(f"missing section(s): {', '.join(missing)}")
    prog = {k: S.desugar(S.parse_program(parts[k])) for k in _SECTIONS[1:]}
    for k in ("plant_a", "plant_b"):
        if not isinstance(prog[k], S.ODE):
            raise ValueError(f"{k} must be a single ODE")
    names = tuple(S.Variable(n.strip()) for n in parts.get("vars", "").split(",") if n.strip())
    return LoopModel(prog["ctrl_a"], prog["plant_a"], prog["ctrl_b"], prog["plant_b"], names)


def ode_refines_obligation(m: LoopModel) -> S.Formula:
    """``[ctrl_a][plant_a](p = q & R)`` for plants ``y'=p & Q`` and ``y'=q & R``."""
    qa = dict(m.plant_a.eqs)
    eqs = [S.Cmp("=", qa[y], t) for y, t in m.plant_b.eqs]
    return S.Box(m.ctrl_a, S.Box(m.plant_a, S.conj(*eqs, m.plant_b.domain)))


def _integrate_time(p: Poly, tau: S.Variable) -> Poly:
    out = {}
    for mono, c in p.terms.items():
        d = dict(mono)
        k = d.get(tau, 0)
        d[tau] = k + 1
        out[tuple(sorted(d.items(), key=lambda ve: (ve[0].name, ve[0].differential)))] = c / (k + 1)
    return Poly(out)


def symbolic_solution(ode: S.ODE, tau: S.Variable) -> dict:
    """Polynomial flow ``y(tau)`` in the initial values, for acyclic polynomial ODEs."""
    rhs = {v: term_to_poly(t) for v, t in ode.eqs}
    odevars = set(rhs)
    order, seen, busy = [], set(), set()

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
        rate = rhs[v].substitute({w: sol[w] for w in rhs[v].vars() if w in sol})
        sol[v] = Poly.var(v) + _integrate_time(rate, tau)
    return sol


def _flow_formula(f: S.Formula, sol: dict) -> S.Formula:
    out = f
    for v, p in sol.items():
        out = _subst(out, v, p.to_term())
    return out


def decide_loop(m: LoopModel, budget: int = DEFAULT_BRANCH_BUDGET):
    """Decide ``(ctrl_a; plant_a)* refines (ctrl_b; plant_b)*``.

    The loop is reduced to one iteration, which is sound and, when ctrl_b is
    idempotent, also complete. The iteration splits into the discrete step
    ``ctrl_a; ?Q`` against ``ctrl_b; ?R`` and the ODE obligation.
    """
    pa, pb = m.plant_a, m.plant_b
    ys = set(pa.vars)
    if ys != set(pb.vars):
        return Unknown("Unsupported: plants evolve different variables")
    for c in (m.ctrl_a, m.ctrl_b):
        if not is_discrete(c):
            return Unknown("Unsupported: controllers must be loop-free discrete programs")
        if any(v.differential for v in _program_vars(c)):
            return Unknown("Unsupported: controllers must not mention differential symbols")
    idem = is_idempotent(m.ctrl_b, budget)
    if idem.status == "invalid":
        return Unknown("ctrl_b not idempotent")
    if idem.status == "unknown":
        return Unknown(idem.reason)

    qa, rb = pa.domain, pb.domain
    step = decide_discrete(S.Seq(m.ctrl_a, S.Test(qa)), S.Seq(m.ctrl_b, S.Test(rb)), budget)
    if step.status == "unknown":
        return step
    if step.status == "invalid":
        init, final = _settle(step.initial, step.final, pa)
        return Invalid(init, final, "discrete step ctrl_a;?Q is not refined by ctrl_b;?R")

    trail = ["unloop", "G", ";"]
    # right-hand sides
    try:
        rhs_a = {v: term_to_poly(t) for v, t in pa.eqs}
        rhs_b = {v: term_to_poly(t) for v, t in pb.eqs}
    except Unsupported as exc:
        return Unknown(f"Unsupported: {exc}")
    differ = sorted((y for y in ys if rhs_a[y] != rhs_b[y]), key=lambda v: v.name)
    if differ:
        form = normalize(S.Seq(m.ctrl_a, S.Test(qa)), budget=budget)
        for y in differ:
            gap = rhs_a[y] - rhs_b[y]
            neq = S.Not(S.Cmp("=", gap.to_term(), S.Number(0)))
            try:
                w = arith.satisfiable(S.And(form.psi, neq))
            except arith.Nonlinear as exc:
                return Unknown(str(exc))
            except (Unsupported, arith.SizeBudgetExceeded) as exc:
                return Unknown(f"Unsupported: {exc}")
            if w is not None:
                names = sorted(set(_program_vars(m.left(), m.right())) | {S.Variable(n) for n in w
                               if S.Variable(n) not in form.vars
                               and n not in {str(g) for g in form.ghosts.values()}},
                               key=lambda v: (v.name, v.differential))
                init, mid = _witness(w, form.vars, form.ghosts,
                                     [v for v in names if v not in form.vars])
                init, final = _settle(init, mid, pa)
                want = rhs_a[y].evaluate(lambda v: final.get(v))
                got = rhs_b[y].evaluate(lambda v: final.get(v))
                return Invalid(init, final,
                               f"{y}' = {want} after plant_a but plant_b forces {y}' = {got}")
            if gap.vars() & ys:
                return Unknown("Unsupported: right-hand sides differ along the flow")
    trail.append("ode")

    # domain: R must hold wherever plant_a can go
    dw = arith.valid(S.Imply(qa, rb))
    if dw.status == "valid":
        return Valid(tuple(trail[:3] + ["DW="] + trail[3:]))
    return _domain_by_solution(m, trail, dw, budget)


def _settle(init: State, mid: State, ode: S.ODE) -> tuple:
    """Run ``ode`` for duration zero from ``mid`` and keep ``init`` distinguishable."""
    final = mid
    for v, t in ode.eqs:
        final = final.set(v.prime(), term_to_poly(t).evaluate(lambda w: mid.get(w)))
    if final == init:
        v = ode.eqs[0][0].prime()
        init = init.set(v, final.get(v) + 1)
    return init, final


def _domain_by_solution(m: LoopModel, trail: list, dw, budget: int):
    pa, rb = m.plant_a, m.plant_b.domain
    taken = _names(m.left(), m.right())
    tau, s = S.Variable("tau"), S.Variable("s")
    while tau.name in taken:
        tau = S.Variable(tau.name + "_")
    while s.name in taken or s == tau:
        s = S.Variable(s.name + "_")
    try:
        at_tau = symbolic_solution(pa, tau)
        at_s = symbolic_solution(pa, s)
    except Unsupported as exc:
        return Unknown(f"Unsupported: {exc}")
    form = normalize(m.ctrl_a, budget=budget, taken=taken | {tau.name, s.name})
    along = S.Forall(s, S.Imply(S.And(S.Cmp("<=", S.Number(0), S.Var(s)),
                                      S.Cmp("<=", S.Var(s), S.Var(tau))),
                                _flow_formula(pa.domain, at_s)))
    goal = S.Forall(tau, S.Imply(S.conj(form.psi, S.Cmp(">=", S.Var(tau), S.Number(0)), along),
                                 _flow_formula(rb, at_tau)))
    r = arith.valid(goal)
    if r.status == "valid":
        return Valid(tuple(trail[:3] + ["DS"] + trail[3:]))
    if r.status == "unknown":
        return Unknown(r.reason)
    w = r.witness
    others = [v for v in _program_vars(m.left(), m.right()) if v not in form.vars]
    init, mid = _witness(w, form.vars, form.ghosts, others)
    r_time = w.get(tau.name, Fraction(0))
    flow = {v: p.evaluate(lambda x: r_time if x == tau else mid.get(x)) for v, p in at_tau.items()}
    end = mid.update(flow)
    init, final = _settle(init, end, pa)
    return Invalid(init, final, "plant_a leaves the domain of plant_b")


def decide_file(path: str, budget: int = DEFAULT_BRANCH_BUDGET):
    with open(path, encoding="utf-8") as fh:
        return decide_loop(parse_model(fh.read()), budget)


__all__ = ["BranchBudgetExceeded", "CanonicalForm", "Invalid", "LoopModel", "Unknown", "Valid",
           "decide_discrete", "decide_file", "decide_loop", "ghost_names", "is_discrete",
           "is_idempotent", "normalize", "ode_refines_obligation", "parse_model",
           "symbolic_solution"]
