"""Random linear sentences and their comparison against the reference."""

import random
from fractions import Fraction

from drl import arith
from drl import syntax as S

from oracles import linear_ref as R

NAMES = ("w", "x", "y", "z")
VARS = tuple(S.Variable(n) for n in NAMES)
GRID = tuple(Fraction(n, d) for n in range(-3, 4) for d in (1, 2))


def _lin(rng, vs):
    t = S.Number(Fraction(rng.randint(-3, 3)))
    for v in vs:
        c = rng.randint(-2, 2)
        if c:
            t = S.Plus(t, S.Times(S.Number(Fraction(c)), S.Var(v)))
    return t


def _atom(rng, vs):
    return S.Cmp(rng.choice(S.CMP_OPS), _lin(rng, vs), S.Number(Fraction(0)))


def _qf(rng, vs, depth=2):
    if depth == 0 or rng.random() < 0.35:
        return _atom(rng, vs)
    k = rng.randrange(4)
    a, b = _qf(rng, vs, depth - 1), _qf(rng, vs, depth - 1)
    return (S.And(a, b), S.Or(a, b), S.Imply(a, b), S.Not(a))[k]


def _combination(rng, vs):
    """``L1>=0 & L2>=0 -> c1*L1 + c2*L2 + k >= 0``, valid iff ``k >= 0`` mostly."""
    l1, l2 = _lin(rng, vs), _lin(rng, vs)
    c1, c2 = rng.randint(0, 2), rng.randint(0, 2)
    k = rng.randint(-1, 2)
    goal = S.Plus(S.Plus(S.Times(S.Number(c1), l1), S.Times(S.Number(c2), l2)), S.Number(k))
    zero = S.Number(0)
    return S.Imply(S.And(S.Cmp(">=", l1, zero), S.Cmp(">=", l2, zero)),
                   S.Cmp(rng.choice((">=", ">")), goal, zero))


def random_sentence(rng: random.Random) -> S.Formula:
    vs = list(VARS[:rng.randint(1, 4)])
    body = _combination(rng, vs) if rng.random() < 0.4 else _qf(rng, vs)
    if rng.random() < 0.5:
        v = rng.choice(vs)
        q = S.Exists(v, _qf(rng, vs, 1)) if rng.random() < 0.6 else S.Forall(v, _qf(rng, vs, 1))
        body = rng.choice((S.And, S.Or, S.Imply))(body, q)
    free = [v for v in vs if rng.random() < 0.5]
    for v in free:
        body = S.Forall(v, body)
    return body


def _free(f):
    from drl import statics as ST
    return sorted(str(v) for v in ST.fv(f).elems)


def compare(f: S.Formula, rng: random.Random, samples: int = 40) -> dict:
    """FM verdict, sampled falsification, and witness replay for one sentence."""
    while isinstance(f, S.Forall):
        f = f.body
    names = _free(f)
    verdict = arith.valid(f)
    sampled_false = None
    for _ in range(samples):
        env = {n: rng.choice(GRID) for n in names}
        if not R.holds(f, env):
            sampled_false = env
            break
    out = {"verdict": verdict.status if hasattr(verdict, "status") else type(verdict).__name__,
           "sampled_false": sampled_false, "witness_ok": None}
    if isinstance(verdict, arith.Invalid):
        env = {k: Fraction(v) for k, v in verdict.witness.items()}
        out["witness_ok"] = not R.holds(f, env)
    return out


def run(n: int, seed: int = 0) -> dict:
    rng = random.Random(seed)
    stats = {"valid": 0, "invalid": 0, "unknown": 0, "disagree": 0, "bad_witness": 0,
             "invalid_sampled": 0}
    for _ in range(n):
        f = random_sentence(rng)
        r = compare(f, rng)
        kind = r["verdict"]
        stats[kind] += 1
        if kind == "valid" and r["sampled_false"] is not None:
            stats["disagree"] += 1
        if kind == "invalid":
            if not r["witness_ok"]:
                stats["bad_witness"] += 1
            if r["sampled_false"] is not None:
                stats["invalid_sampled"] += 1
    return stats
