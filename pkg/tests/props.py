"""Coincidence and bound-effect checks on concrete random instances.

A check returns ``"ok"``, ``"skip"`` (the oracle could not answer exactly) or
``"violation"``.
"""

import itertools
import random
from fractions import Fraction

from drl import fuzz as F
from drl import oracle as O
from drl import statics as ST
from drl import syntax as S

STATE_VARS = F.STATE_VARS
VALUES = F.VALUES
CFG = F.FUZZ_CONFIG
WORK = 4000


def concrete_term(rng: random.Random, depth: int = 3) -> S.Term:
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.6:
            return S.Var(rng.choice(STATE_VARS))
        return S.Number(Fraction(rng.randint(-3, 3)))
    k = rng.randrange(5)
    if k == 4 and depth >= 2:
        inner = concrete_term(rng, depth - 2)
        if S.is_differential_free(inner):
            return S.Differential(inner)
    if k == 3:
        return S.Neg(concrete_term(rng, depth - 1))
    cls = (S.Plus, S.Minus, S.Times, S.Plus, S.Times)[k]
    return cls(concrete_term(rng, depth - 1), concrete_term(rng, depth - 1))


def concrete_formula(rng: random.Random, depth: int = 2) -> S.Formula:
    if depth <= 0 or rng.random() < 0.3:
        return F._formula(rng, [S.Var(v) for v in F.PROG_VARS] + [S.Var(F.Z)], False)
    k = rng.randrange(6)
    if k == 0:
        return S.Not(concrete_formula(rng, depth - 1))
    if k == 1:
        return S.And(concrete_formula(rng, depth - 1), concrete_formula(rng, depth - 1))
    if k == 2:
        return S.Imply(concrete_formula(rng, depth - 1), concrete_formula(rng, depth - 1))
    if k == 3:
        return S.Box(F.random_program(rng, 2), concrete_formula(rng, depth - 1))
    if k == 4:
        return S.Refines(F.random_program(rng, 2), F.random_program(rng, 2))
    return S.Diamond(F.random_program(rng, 2), concrete_formula(rng, depth - 1))


def random_state(rng: random.Random) -> O.State:
    return O.State({v: rng.choice(VALUES) for v in STATE_VARS})


def agreeing_state(rng: random.Random, s: O.State, keep: ST.VarSet) -> O.State:
    """Random state that agrees with ``s`` on ``keep``."""
    out = s
    for v in STATE_VARS:
        if v not in keep and rng.random() < 0.7:
            out = out.set(v, rng.choice(VALUES))
    return out


def _guard(fn):
    O.work_limit(WORK)
    try:
        return fn()
    except O.WorkBudgetExceeded:
        return None
    finally:
        O.work_limit(None)


def check_term(rng: random.Random) -> str:
    t = concrete_term(rng)
    s1 = random_state(rng)
    s2 = agreeing_state(rng, s1, ST.fv(t))
    return "ok" if O.eval_term(s1, t) == O.eval_term(s2, t) else "violation"


def check_formula(rng: random.Random) -> str:
    f = S.desugar(concrete_formula(rng))
    s1 = random_state(rng)
    s2 = agreeing_state(rng, s1, ST.fv(f))
    pool = O.harvest(f)
    t1 = _guard(lambda: O._formula(s1, f, CFG, pool))
    t2 = _guard(lambda: O._formula(s2, f, CFG, pool))
    if t1 is None or t2 is None or not (t1.exact and t2.exact):
        return "skip"
    return "ok" if t1.value == t2.value else "violation"


def check_program(rng: random.Random) -> str:
    """Transitions from agreeing states are matched on FV and MBV."""
    p = F.random_program(rng)
    keep = ST.fv(p)
    s1 = random_state(rng)
    s2 = agreeing_state(rng, s1, keep)
    pool = O.harvest(p)
    got = _guard(lambda: O.transitions(p, s1, CFG, pool))
    if got is None:
        return "skip"
    trans, _ = got
    bound, must = ST.bv(p), ST.mbv(p)
    verdict = "ok"
    for w1, exact in trans[:4]:
        if not exact:
            continue
        # written variables keep w1's value; others may also stay at s2's value
        fixed, loose = {}, []
        for v in STATE_VARS:
            if v not in bound:
                fixed[v] = s2.get(v)
            elif v in keep or v in must:
                fixed[v] = w1.get(v)
            else:
                loose.append(v)
        found, all_exact = False, True
        for choice in itertools.product(*[(w1.get(v), s2.get(v)) for v in loose]):
            w2 = O.State({**fixed, **dict(zip(loose, choice))})
            r = _guard(lambda: O.reach(p, s2, w2, CFG, pool))
            if r is None:
                all_exact = False
                continue
            if r.value:
                found = True
                break
            all_exact = all_exact and r.exact
        if not found:
            if all_exact:
                return "violation"
            verdict = "skip"
    return verdict


def check_bound_effect(rng: random.Random) -> str:
    p = F.random_program(rng)
    s = random_state(rng)
    got = _guard(lambda: O.transitions(p, s, CFG, O.harvest(p)))
    if got is None:
        return "skip"
    bound = ST.bv(p)
    for w, _ in got[0]:
        for v in STATE_VARS:
            if v not in bound and w.get(v) != s.get(v):
                return "violation"
    return "ok"


CHECKS = {"term": check_term, "formula": check_formula, "program": check_program,
          "bound_effect": check_bound_effect}


def run(n: int, seed: int = 0) -> dict:
    """``n`` instances split evenly over the four checks."""
    counts = {k: {"ok": 0, "skip": 0, "violation": 0} for k in CHECKS}
    rng = random.Random(seed)
    for i in range(n):
        name = list(CHECKS)[i % len(CHECKS)]
        counts[name][CHECKS[name](rng)] += 1
    return counts


def symbolic_program(rng: random.Random, depth: int = 3) -> S.Program:
    """Program over x, y, z mentioning the symbols c(), f(.,.), p(.) and a."""
    vs = (F.X, F.Y, F.Z)
    atoms = [S.Var(v) for v in vs]

    def term():
        r = rng.random()
        if r < 0.3:
            return S.FuncApp("c")
        if r < 0.55:
            return S.FuncApp("f", (rng.choice(atoms), rng.choice(atoms)))
        return F._poly(rng, atoms, False)

    if depth <= 1 or rng.random() < 0.3:
        r = rng.random()
        v = rng.choice(vs)
        if r < 0.3:
            return S.Assign(v, term())
        if r < 0.4:
            return S.AssignAny(v)
        if r < 0.6:
            cond = S.PredApp("p", (term(),)) if rng.random() < 0.5 else S.Cmp(">", term(),
                                                                              S.Number(0))
            return S.Test(cond)
        if r < 0.8:
            dom = S.PredApp("p", (rng.choice(atoms),)) if rng.random() < 0.5 else S.TRUE
            return S.ODE(((v, term()),), dom)
        return S.ProgConst("a")
    cls = rng.choice((S.Seq, S.Choice, S.Loop))
    if cls is S.Loop:
        return S.Loop(symbolic_program(rng, depth - 1))
    return cls(symbolic_program(rng, depth - 1), symbolic_program(rng, depth - 1))


def random_subst(rng: random.Random):
    from drl.usubst import Subst
    d0, d1 = S.Dot(0), S.Dot(1)
    atoms = [S.Var(v) for v in (F.X, F.Y, F.Z)]
    return Subst(
        funcs={("c", 0): rng.choice(atoms + [S.Number(2), S.Plus(atoms[0], atoms[1])]),
               ("f", 2): rng.choice([S.Plus(d0, d1), S.Times(d0, rng.choice(atoms)),
                                     S.Minus(d1, S.Number(1)), S.Number(3)])},
        preds={("p", 1): rng.choice([S.Cmp(">=", d0, rng.choice(atoms)),
                                     S.Cmp("<", d0, S.Number(0))])},
        progs={"a": rng.choice([S.parse_program("x:=y"), S.parse_program("?z>0"),
                                S.parse_program("{y:=*}*"), S.parse_program("{x'=y}"),
                                S.parse_program("z:=1 ++ y:=2")])},
    )
