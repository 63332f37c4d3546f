import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from drl import fuzz as F
from drl import oracle as O
from drl import syntax as S

X = S.Variable("x")


def st_(**kw):
    return O.State(kw)


def truth(text, state, interp=None):
    return O.eval_formula(state, S.parse_formula(text), interp)


def test_state_defaults_and_updates():
    s = st_(x=Fraction(1, 2))
    assert s.get(X) == Fraction(1, 2) and s.get("y") == 0
    t = s.set("y", 3)
    assert t.get("y") == 3 and s.get("y") == 0
    assert st_(x=0) == O.State()
    assert t.to_json() == {"x": "1/2", "y": "3"}


def test_terms():
    assert O.eval_term(st_(x=2, y=3), S.parse_term("x*y-(x+1)")) == 3
    assert O.eval_term(st_(x=2, **{"x'": 5}), S.parse_term("(x*x)'")) == 20
    with pytest.raises(O.UnknownSymbol):
        O.eval_term(O.State(), S.parse_term("f(x)"))
    interp = O.Interp(funcs={("f", 1): S.parse_term(".+1")})
    assert O.eval_term(st_(x=2), S.parse_term("f(x)"), interp) == 3


def test_refinement_depends_on_bound_variable():
    f = "{?true} refines {x:=1}"
    assert truth(f, st_(x=0)) == O.FALSE_EXACT
    assert truth(f, st_(x=1)) == O.TRUE_EXACT


@pytest.mark.parametrize("text,state,value", [
    ("[x:=x+1]x>0", {"x": 0}, True),
    ("[x:=*]x>0", {}, False),
    ("<x:=*>x>5", {}, True),
    ("[x:=1 ++ x:=-1]x>0", {}, False),
    ("[?x>0]x>0", {}, True),
    ("[{x'=1 & x<=2}]x<=2", {}, True),
    ("[{x'=1}]x>=0", {"x": 0}, True),
    ("[{x'=-1}]x>=0", {"x": 1}, False),
    ("<{x'=1}>x>=3", {}, True),
    ("{x:=1; x:=*} refines {x:=*}", {}, True),
    ("{x:=*} refines {x:=1}", {}, False),
    ("{x'=1 & x<=2} refines {x'=1 & x<=1}", {}, False),
    ("{x'=1 & x*x<=2} refines {x'=1 & x<=1}", {}, False),
    ("{x'=1 & x<=1} refines {x'=1 & x<=2}", {}, True),
    ("\\forall y (y*y>=0)", {}, True),
])
def test_exact_truths(text, state, value):
    t = truth(text, O.State(state))
    assert t.value == value
    if not value:
        assert t.exact


def test_loops_are_sampled():
    # reachable values of a loop are only sampled; false claims are still exact
    t = truth("[{x:=x+1}*]x>=0", st_(x=0))
    assert t.value
    t = truth("[{x:=x+1}*]x<=1", st_(x=0))
    assert t == O.FALSE_EXACT


def test_transitions_and_reach():
    p = S.parse_program("x:=1 ++ x:=2")
    trans, complete = O.transitions(p, O.State())
    assert complete and {w.get(X) for w, _ in trans} == {1, 2}
    assert O.reach(p, O.State(), st_(x=2)) == O.TRUE_EXACT
    assert O.reach(p, O.State(), st_(x=3)) == O.FALSE_EXACT


def test_ode_transition_times():
    p = S.parse_program("{x'=1 & x<=2}")
    end = {"x'": 1}
    assert O.reach(p, O.State(), st_(x=2, **end)).value
    assert O.reach(p, O.State(), st_(x=Fraction(1, 3), **end)).value
    # the final state also records the differential symbol
    assert O.reach(p, O.State(), st_(x=2)) == O.FALSE_EXACT
    assert O.reach(p, O.State(), st_(x=3, **end)) == O.FALSE_EXACT
    assert O.reach(p, O.State(), st_(x=-1, **end)) == O.FALSE_EXACT


def test_falsify_and_replay():
    a, b = S.parse_program("x:=x+1"), S.parse_program("x:=x+1 ++ x:=x+2")
    assert O.falsify_refinement(a, b, trials=20) is None
    cex = O.falsify_refinement(b, a, trials=20)
    assert cex is not None and O.replay(b, a, cex)
    assert cex.final.get(X) == cex.initial.get(X) + 2


def test_work_budget():
    p = S.parse_program("{x:=x+1 ++ x:=x-1}*")
    O.work_limit(5)
    try:
        with pytest.raises(O.WorkBudgetExceeded):
            O.transitions(p, O.State(), F.FUZZ_CONFIG)
    finally:
        O.work_limit(None)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_symbolic_reach_agrees_with_enumeration(seed):
    """On loop-free discrete programs, exact answers of both routes coincide."""
    rng = random.Random(seed)
    p = F.random_program(rng, 3)
    if any(isinstance(n, (S.Loop, S.ODE)) for n in S.walk(p)):
        return
    s = O.State({v: rng.choice(F.VALUES) for v in F.PROG_VARS})
    trans, _ = O.transitions(p, s, F.FUZZ_CONFIG, O.harvest(p))
    for w, exact in trans[:3]:
        sym = O.reach_symbolic(p, s, w)
        if sym is not None and exact:
            assert sym.value
    target = s.set(X, rng.choice(F.VALUES))
    sym = O.reach_symbolic(p, s, target)
    enum = O.reach(p, s, target, F.FUZZ_CONFIG)
    if sym is not None and enum.exact:
        assert sym.value == enum.value
