"""Soundness fuzzing of axioms against the reference semantics.

Each trial instantiates an axiom by a random concrete substitution (linear or
quadratic terms, small programs of depth at most three) and evaluates the
resulting formula in several random rational states. A falsification is an
exact False from the oracle; answers that rest on sampling are counted as
inconclusive, never as passes of a stronger claim.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import axioms as A
from . import oracle as O
from . import syntax as S
from .usubst import ClashError

MUTANT_KEY = "ode_rev_mutant"
# only the reverse implication of the ODE axiom, without the x'=g(x) conjunct
MUTANT_TEXT = "[{x'=f(x) & p(x)}]q(x) -> {x'=f(x) & p(x)} refines {x'=g(x) & q(x)}"

X, Y, Z = S.Variable("x"), S.Variable("y"), S.Variable("z")
STATE_VARS = (X, Y, Z, X.prime(), Y.prime())
PROG_VARS = (X, Y)
VALUES = tuple(Fraction(n, d) for n in range(-3, 4) for d in (1, 2))
DOT = S.Dot(0)

# the oracle works with a short grid to keep sampled loops and choices cheap
FUZZ_CONFIG = O.Config(grid=tuple(Fraction(v) for v in (-1, 0, 1, 2)),
                       durations=(Fraction(0), Fraction(1, 2), Fraction(1)),
                       loop_depth=2, max_states=60, pool_limit=3)
# oracle steps per evaluation; evaluations that need more count as inconclusive
WORK_LIMIT = 2000


def _num(rng: random.Random, lo=-2, hi=2) -> S.Number:
    return S.Number(Fraction(rng.randint(lo, hi)))


def _poly(rng: random.Random, atoms, quadratic: bool = True) -> S.Term:
    """Random polynomial of degree at most two over ``atoms``."""
    out: S.Term = _num(rng)
    for a in atoms:
        c = rng.randint(-2, 2)
        if c:
            out = S.Plus(out, S.Times(S.Number(Fraction(c)), a))
    if quadratic and atoms and rng.random() < 0.4:
        a, b = rng.choice(atoms), rng.choice(atoms)
        out = S.Plus(out, S.Times(_num(rng, -1, 1), S.Times(a, b)))
    return out


def _cmp(rng: random.Random, atoms, quadratic: bool = True) -> S.Formula:
    return S.Cmp(rng.choice(("<=", "<", "=", ">=", ">")), _poly(rng, atoms, quadratic),
                 _num(rng))


def _formula(rng: random.Random, atoms, quadratic: bool = True) -> S.Formula:
    f = _cmp(rng, atoms, quadratic)
    r = rng.random()
    if r < 0.25:
        f = S.And(f, _cmp(rng, atoms, quadratic))
    elif r < 0.4:
        f = S.Or(f, _cmp(rng, atoms, quadratic))
    elif r < 0.5:
        f = S.Not(f)
    return f


def _var_terms(vs) -> list:
    return [S.Var(v) for v in vs]


def random_program(rng: random.Random, depth: int = 3, vs=PROG_VARS) -> S.Program:
    """Program of depth at most ``depth`` over ``vs`` with linear terms."""
    atoms = _var_terms(vs)
    if depth <= 1 or rng.random() < 0.35:
        r = rng.random()
        v = rng.choice(vs)
        if r < 0.4:
            return S.Assign(v, _poly(rng, atoms, False))
        if r < 0.55:
            return S.AssignAny(v)
        if r < 0.8:
            return S.Test(_formula(rng, atoms, False))
        # nilpotent: the evolving variable's rate does not depend on itself
        others = [S.Var(w) for w in vs if w != v]
        dom = _cmp(rng, atoms, False) if rng.random() < 0.6 else S.TRUE
        return S.ODE(((v, _poly(rng, others, False)),), dom)
    r = rng.random()
    if r < 0.4:
        return S.Seq(random_program(rng, depth - 1, vs), random_program(rng, depth - 1, vs))
    if r < 0.8:
        return S.Choice(random_program(rng, depth - 1, vs), random_program(rng, depth - 1, vs))
    return S.Loop(random_program(rng, depth - 1, vs))


def _ode_rhs_symbols(f: S.Formula) -> set:
    out = set()
    for n in S.walk(f):
        if isinstance(n, S.ODE):
            for _, t in n.eqs:
                for m in S.walk(t):
                    if isinstance(m, S.FuncApp):
                        out.add(m.name)
    return out


def random_interp(rng: random.Random, formula: S.Formula) -> O.Interp:
    """Concrete interpretation for every symbol of ``formula``."""
    rhs = _ode_rhs_symbols(formula)
    funcs, preds, predicationals, progs = {}, {}, {}, {}
    has_ode = any(isinstance(n, S.ODE) for n in S.walk(formula))
    for name, kind, arity in sorted(S.signature(formula)):
        dots = [S.Dot(i) for i in range(arity)]
        if kind == "func":
            if name in rhs:
                # right-hand sides stay constant in the evolving variable (the
                # linear ghost coefficient is zero) so that flows are polynomial
                rep = S.Number(Fraction(0)) if name == "a" and "DG" in _tags(formula) \
                    else _num(rng)
            else:
                rep = _poly(rng, dots)
            funcs[(name, arity)] = rep
        elif kind == "pred":
            preds[(name, arity)] = _formula(rng, dots, not has_ode) if dots else \
                rng.choice((S.TRUE, S.FALSE, S.TRUE))
        elif kind == "predicational":
            predicationals[name] = _formula(rng, _var_terms((X, Y, Z)), True)
        elif kind == "prog":
            progs[name] = random_program(rng)
    return O.Interp(funcs, preds, predicationals, progs)


def _tags(formula: S.Formula) -> set:
    # DG is the only axiom with two evolving variables
    for n in S.walk(formula):
        if isinstance(n, S.ODE) and len(n.eqs) > 1:
            return {"DG"}
    return set()


def random_state(rng: random.Random) -> O.State:
    return O.State({v: rng.choice(VALUES) for v in STATE_VARS})


@dataclass
class AxiomReport:
    key: str
    instances: int = 0
    evaluations: int = 0
    falsified: int = 0
    inconclusive: int = 0
    clashes: int = 0
    over_budget: int = 0
    seconds: float = 0.0
    example: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.falsified == 0

    def to_json(self):
        out = {"key": self.key, "ok": self.ok, "instances": self.instances,
               "evaluations": self.evaluations, "falsified": self.falsified,
               "inconclusive": self.inconclusive, "over_budget": self.over_budget,
               "clashes": self.clashes,
               "seconds": round(self.seconds, 3)}
        if self.example:
            out["counterexample"] = self.example
        return out


def fuzz_formula(key: str, formula: S.Formula, samples: int = 1000, states: int = 20,
                 seed: int = 0, cfg: O.Config = FUZZ_CONFIG, work: Optional[int] = WORK_LIMIT,
                 stop_on_falsification: bool = False) -> AxiomReport:
    rng = random.Random(f"{seed}:{key}")
    rep = AxiomReport(key)
    start = time.perf_counter()
    formula = S.desugar(formula)
    while rep.instances < samples:
        interp = random_interp(rng, formula)
        try:
            inst = interp.expand(formula)
        except ClashError:
            rep.clashes += 1
            continue
        rep.instances += 1
        pool = O.harvest(inst)
        for _ in range(states):
            s = random_state(rng)
            rep.evaluations += 1
            O.work_limit(work)
            try:
                t = O._formula(s, inst, cfg, pool)
            except O.WorkBudgetExceeded:
                rep.inconclusive += 1
                rep.over_budget += 1
                continue
            finally:
                O.work_limit(None)
            if t.value:
                continue
            if t.exact:
                rep.falsified += 1
                if rep.example is None:
                    rep.example = {"instance": S.pretty(inst), "state": s.to_json()}
                if stop_on_falsification:
                    rep.seconds = time.perf_counter() - start
                    return rep
            else:
                rep.inconclusive += 1
    rep.seconds = time.perf_counter() - start
    return rep


def fuzz_axiom(key: str, samples: int = 1000, states: int = 20, seed: int = 0,
               cfg: O.Config = FUZZ_CONFIG, work: Optional[int] = WORK_LIMIT) -> AxiomReport:
    if key == MUTANT_KEY:
        return fuzz_formula(key, S.parse_formula(MUTANT_TEXT), samples, states, seed, cfg, work)
    entry = A.lookup(key)
    return fuzz_formula(entry.key, entry.formula, samples, states, seed, cfg, work)


def fuzz_axioms(keys=None, samples: int = 1000, states: int = 20, seed: int = 0,
                cfg: O.Config = FUZZ_CONFIG, work: Optional[int] = WORK_LIMIT) -> list:
    keys = keys or [a.key for a in A.all_axioms()]
    return [fuzz_axiom(k, samples, states, seed, cfg, work) for k in keys]


__all__ = ["AxiomReport", "FUZZ_CONFIG", "MUTANT_KEY", "MUTANT_TEXT", "fuzz_axiom",
           "fuzz_axioms", "fuzz_formula", "random_interp", "random_program", "random_state"]
